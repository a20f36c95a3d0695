#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tpr::othello {

enum class Disc : std::uint8_t { Vacant, Black, White };
enum class Player : std::uint8_t { Black, White };

/// Egocentric label of a square. The numeric values are the on-disk label
/// encoding and the row order of every 3-row probe block.
enum class CellColor : std::uint8_t { Empty = 0, Current = 1, Opponent = 2 };

inline constexpr int kNumSquares = 64;
inline constexpr int kNumColors = 3;

constexpr Player opponent(Player p) {
  return p == Player::Black ? Player::White : Player::Black;
}

const char* to_string(CellColor c);
std::optional<CellColor> parse_color(std::string_view name);

/// A board square. Rows are letters A-H, columns digits 1-8; the public
/// index is 1-based (index = 8*(row-1) + col) while pos() is the 0-based
/// bit position used internally.
class Square {
 public:
  constexpr Square() = default;

  static constexpr Square from_pos(int pos) { return Square(pos); }
  static constexpr Square from_index(int index) { return Square(index - 1); }
  static constexpr Square from_row_col(int row, int col) {
    return Square(8 * (row - 1) + (col - 1));
  }
  static std::optional<Square> parse(std::string_view token);

  constexpr int pos() const { return pos_; }
  constexpr int index() const { return pos_ + 1; }
  constexpr int row() const { return pos_ / 8 + 1; }
  constexpr int col() const { return pos_ % 8 + 1; }
  constexpr std::uint64_t bit() const { return std::uint64_t{1} << pos_; }
  std::string token() const;

  constexpr bool is_center() const {
    return (row() == 4 || row() == 5) && (col() == 4 || col() == 5);
  }

  friend constexpr bool operator==(Square, Square) = default;
  friend constexpr auto operator<=>(Square, Square) = default;

 private:
  constexpr explicit Square(int pos) : pos_(static_cast<std::int8_t>(pos)) {}
  std::int8_t pos_ = 0;
};

inline constexpr std::uint64_t kCenterMask =
    Square::from_row_col(4, 4).bit() | Square::from_row_col(4, 5).bit() |
    Square::from_row_col(5, 4).bit() | Square::from_row_col(5, 5).bit();

/// Set of squares backed by a 64-bit mask.
class SquareSet {
 public:
  constexpr SquareSet() = default;
  constexpr explicit SquareSet(std::uint64_t bits) : bits_(bits) {}

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool contains(Square s) const { return (bits_ & s.bit()) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  std::vector<Square> squares() const;

  friend constexpr bool operator==(SquareSet, SquareSet) = default;

 private:
  std::uint64_t bits_ = 0;
};

using Labels = std::array<CellColor, kNumSquares>;

class Board {
 public:
  Board() = default;
  Board(std::uint64_t black, std::uint64_t white, Player to_move)
      : black_(black), white_(white), to_move_(to_move) {}

  Disc at(Square s) const;
  void set(Square s, Disc d);

  std::uint64_t black() const { return black_; }
  std::uint64_t white() const { return white_; }
  std::uint64_t occupied() const { return black_ | white_; }
  std::uint64_t own() const { return to_move_ == Player::Black ? black_ : white_; }
  std::uint64_t other() const { return to_move_ == Player::Black ? white_ : black_; }
  int disc_count() const { return std::popcount(occupied()); }

  Player to_move() const { return to_move_; }
  void set_to_move(Player p) { to_move_ = p; }

  friend bool operator==(const Board&, const Board&) = default;

 private:
  std::uint64_t black_ = 0;
  std::uint64_t white_ = 0;
  Player to_move_ = Player::Black;
};

std::ostream& operator<<(std::ostream& os, const Board& b);

using Transcript = std::vector<Square>;

Board initial_board();
SquareSet legal_moves(const Board& board);

/// Places a disc for the side to move and flips every bracketed run. The
/// side to move passes to the opponent unless the opponent has no legal
/// reply, in which case it is retained. Throws IllegalMove.
Board apply_move(const Board& board, Square move);

Labels egocentric_labels(const Board& board);

/// Board whose side to move owns the Current discs. Legal moves depend only
/// on the egocentric view, so the absolute colour is fixed to Black.
Board board_from_labels(const Labels& labels);

/// Uniformly random legal playout; ends at max_len plies or when neither
/// side can move.
Transcript random_game(std::uint64_t seed, int max_len = 60);

/// Positions after each ply of the transcript (excluding the start).
/// Throws IllegalMove if the transcript is not a legal game.
std::vector<Board> replay(const Transcript& moves);

/// Number of legal move sequences of exactly `depth` plies from the start.
std::uint64_t game_tree_count(int depth);

/// Every occupied square is 8-connected through occupied squares to the
/// centre four, and the centre four are occupied.
bool passes_island_check(const Board& board);

struct Edit {
  Square square;
  CellColor from;
  CellColor to;
};

struct TargetBoard {
  Board board;
  std::vector<Edit> edits;
};

/// Rewrites the edited squares, interpreting colours relative to the side to
/// move of `board`.
Board apply_edits(const Board& board, const std::vector<Edit>& edits);

/// Picks `n_edits` distinct non-centre occupied squares and either flips or
/// empties each, until the result passes the island check and its legal
/// move set differs from the original. Throws NoValidTarget.
TargetBoard make_target_board(const Board& board, std::uint64_t seed,
                              int n_edits = 1, int retry_cap = 1000);

// Transcript text format: one game per line, space separated tokens.
std::string format_transcript(const Transcript& t);
Transcript parse_transcript(std::string_view line);
void write_transcripts(std::ostream& os, const std::vector<Transcript>& games);
std::vector<Transcript> read_transcripts(std::istream& is);

}  // namespace tpr::othello
