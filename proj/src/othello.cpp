#include "tpr/othello.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "tpr/errors.hpp"

namespace tpr::othello {
namespace {

constexpr std::uint64_t kNotCol1 = 0xFEFEFEFEFEFEFEFEULL;
constexpr std::uint64_t kNotCol8 = 0x7F7F7F7F7F7F7F7FULL;

// pos = 8*row + col, so +1 moves east and +8 moves south.
enum Direction { kE, kW, kS, kN, kSE, kSW, kNE, kNW };
constexpr Direction kDirections[] = {kE, kW, kS, kN, kSE, kSW, kNE, kNW};

constexpr std::uint64_t shift(std::uint64_t b, Direction d) {
  switch (d) {
    case kE: return (b << 1) & kNotCol1;
    case kW: return (b >> 1) & kNotCol8;
    case kS: return b << 8;
    case kN: return b >> 8;
    case kSE: return (b << 9) & kNotCol1;
    case kSW: return (b << 7) & kNotCol8;
    case kNE: return (b >> 7) & kNotCol1;
    case kNW: return (b >> 9) & kNotCol8;
  }
  return 0;
}

std::uint64_t move_mask(std::uint64_t own, std::uint64_t other) {
  const std::uint64_t empty = ~(own | other);
  std::uint64_t moves = 0;
  for (Direction d : kDirections) {
    std::uint64_t run = shift(own, d) & other;
    for (int i = 0; i < 5; ++i) run |= shift(run, d) & other;
    moves |= shift(run, d) & empty;
  }
  return moves;
}

std::uint64_t flip_mask(std::uint64_t own, std::uint64_t other, std::uint64_t move) {
  std::uint64_t flips = 0;
  for (Direction d : kDirections) {
    std::uint64_t run = 0;
    std::uint64_t cur = shift(move, d);
    while (cur & other) {
      run |= cur;
      cur = shift(cur, d);
    }
    if (cur & own) flips |= run;
  }
  return flips;
}

std::uint64_t dilate(std::uint64_t b) {
  std::uint64_t out = b;
  for (Direction d : kDirections) out |= shift(b, d);
  return out;
}

std::uint64_t count_sequences(const Board& b, int depth) {
  if (depth == 0) return 1;
  const std::uint64_t moves = legal_moves(b).bits();
  std::uint64_t total = 0;
  for (std::uint64_t m = moves; m; m &= m - 1) {
    total += count_sequences(apply_move(b, Square::from_pos(std::countr_zero(m))), depth - 1);
  }
  return total;
}

Disc disc_for(CellColor c, Player to_move) {
  switch (c) {
    case CellColor::Empty: return Disc::Vacant;
    case CellColor::Current: return to_move == Player::Black ? Disc::Black : Disc::White;
    case CellColor::Opponent: return to_move == Player::Black ? Disc::White : Disc::Black;
  }
  return Disc::Vacant;
}

}  // namespace

const char* to_string(CellColor c) {
  switch (c) {
    case CellColor::Empty: return "empty";
    case CellColor::Current: return "current";
    case CellColor::Opponent: return "opponent";
  }
  return "?";
}

std::optional<CellColor> parse_color(std::string_view name) {
  if (name == "empty") return CellColor::Empty;
  if (name == "current") return CellColor::Current;
  if (name == "opponent") return CellColor::Opponent;
  return std::nullopt;
}

std::optional<Square> Square::parse(std::string_view token) {
  if (token.size() != 2) return std::nullopt;
  const char r = token[0];
  const char c = token[1];
  if (r < 'A' || r > 'H' || c < '1' || c > '8') return std::nullopt;
  return Square::from_row_col(r - 'A' + 1, c - '0');
}

std::string Square::token() const {
  return {static_cast<char>('A' + row() - 1), static_cast<char>('0' + col())};
}

std::vector<Square> SquareSet::squares() const {
  std::vector<Square> out;
  out.reserve(size());
  for (std::uint64_t m = bits_; m; m &= m - 1) out.push_back(Square::from_pos(std::countr_zero(m)));
  return out;
}

Disc Board::at(Square s) const {
  if (black_ & s.bit()) return Disc::Black;
  if (white_ & s.bit()) return Disc::White;
  return Disc::Vacant;
}

void Board::set(Square s, Disc d) {
  black_ &= ~s.bit();
  white_ &= ~s.bit();
  if (d == Disc::Black) black_ |= s.bit();
  if (d == Disc::White) white_ |= s.bit();
}

std::ostream& operator<<(std::ostream& os, const Board& b) {
  os << "  12345678\n";
  for (int r = 1; r <= 8; ++r) {
    os << static_cast<char>('A' + r - 1) << ' ';
    for (int c = 1; c <= 8; ++c) {
      switch (b.at(Square::from_row_col(r, c))) {
        case Disc::Black: os << 'X'; break;
        case Disc::White: os << 'O'; break;
        case Disc::Vacant: os << '.'; break;
      }
    }
    os << '\n';
  }
  return os << (b.to_move() == Player::Black ? "black" : "white") << " to move\n";
}

Board initial_board() {
  Board b;
  b.set(Square::from_row_col(4, 5), Disc::Black);
  b.set(Square::from_row_col(5, 4), Disc::Black);
  b.set(Square::from_row_col(4, 4), Disc::White);
  b.set(Square::from_row_col(5, 5), Disc::White);
  b.set_to_move(Player::Black);
  return b;
}

SquareSet legal_moves(const Board& board) {
  return SquareSet(move_mask(board.own(), board.other()));
}

Board apply_move(const Board& board, Square move) {
  if (!legal_moves(board).contains(move)) {
    throw IllegalMove("illegal move " + move.token());
  }
  const std::uint64_t flips = flip_mask(board.own(), board.other(), move.bit());
  const std::uint64_t own = board.own() | flips | move.bit();
  const std::uint64_t other = board.other() & ~flips;
  const Player mover = board.to_move();
  Board next = mover == Player::Black ? Board(own, other, Player::White)
                                      : Board(other, own, Player::Black);
  if (legal_moves(next).empty()) next.set_to_move(mover);
  return next;
}

Labels egocentric_labels(const Board& board) {
  Labels labels;
  const std::uint64_t own = board.own();
  const std::uint64_t other = board.other();
  for (int pos = 0; pos < kNumSquares; ++pos) {
    const std::uint64_t bit = std::uint64_t{1} << pos;
    labels[pos] = (own & bit)     ? CellColor::Current
                  : (other & bit) ? CellColor::Opponent
                                  : CellColor::Empty;
  }
  return labels;
}

Board board_from_labels(const Labels& labels) {
  std::uint64_t own = 0;
  std::uint64_t other = 0;
  for (int pos = 0; pos < kNumSquares; ++pos) {
    if (labels[pos] == CellColor::Current) own |= std::uint64_t{1} << pos;
    if (labels[pos] == CellColor::Opponent) other |= std::uint64_t{1} << pos;
  }
  return Board(own, other, Player::Black);
}

Transcript random_game(std::uint64_t seed, int max_len) {
  std::mt19937_64 rng(seed);
  Transcript moves;
  Board b = initial_board();
  while (static_cast<int>(moves.size()) < max_len) {
    const auto legal = legal_moves(b).squares();
    if (legal.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    const Square m = legal[pick(rng)];
    moves.push_back(m);
    b = apply_move(b, m);
  }
  return moves;
}

std::vector<Board> replay(const Transcript& moves) {
  std::vector<Board> positions;
  positions.reserve(moves.size());
  Board b = initial_board();
  for (Square m : moves) {
    b = apply_move(b, m);
    positions.push_back(b);
  }
  return positions;
}

std::uint64_t game_tree_count(int depth) {
  return count_sequences(initial_board(), depth);
}

bool passes_island_check(const Board& board) {
  const std::uint64_t occ = board.occupied();
  if ((occ & kCenterMask) != kCenterMask) return false;
  std::uint64_t reached = kCenterMask;
  while (true) {
    const std::uint64_t grown = dilate(reached) & occ;
    if (grown == reached) break;
    reached = grown;
  }
  return reached == occ;
}

Board apply_edits(const Board& board, const std::vector<Edit>& edits) {
  Board out = board;
  for (const Edit& e : edits) out.set(e.square, disc_for(e.to, board.to_move()));
  return out;
}

TargetBoard make_target_board(const Board& board, std::uint64_t seed, int n_edits,
                              int retry_cap) {
  const Labels labels = egocentric_labels(board);
  std::vector<Square> candidates = SquareSet(board.occupied() & ~kCenterMask).squares();
  if (n_edits < 1 || static_cast<int>(candidates.size()) < n_edits) {
    throw NoValidTarget("board has too few non-centre discs for the requested edits");
  }
  const SquareSet original = legal_moves(board);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution empty_it(0.5);
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    std::vector<Square> picked;
    std::sample(candidates.begin(), candidates.end(), std::back_inserter(picked), n_edits, rng);
    std::shuffle(picked.begin(), picked.end(), rng);
    TargetBoard t;
    for (Square s : picked) {
      const CellColor from = labels[s.pos()];
      CellColor to = CellColor::Empty;
      if (!empty_it(rng)) to = from == CellColor::Current ? CellColor::Opponent : CellColor::Current;
      t.edits.push_back({s, from, to});
    }
    t.board = apply_edits(board, t.edits);
    if (passes_island_check(t.board) && legal_moves(t.board) != original) return t;
  }
  throw NoValidTarget("no valid target board within " + std::to_string(retry_cap) + " attempts");
}

std::string format_transcript(const Transcript& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ' ';
    out += t[i].token();
  }
  return out;
}

Transcript parse_transcript(std::string_view line) {
  Transcript t;
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok) {
    auto sq = Square::parse(tok);
    if (!sq) throw FormatError("bad move token '" + tok + "'");
    t.push_back(*sq);
  }
  return t;
}

void write_transcripts(std::ostream& os, const std::vector<Transcript>& games) {
  for (const auto& g : games) os << format_transcript(g) << '\n';
}

std::vector<Transcript> read_transcripts(std::istream& is) {
  std::vector<Transcript> games;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    games.push_back(parse_transcript(line));
  }
  return games;
}

}  // namespace tpr::othello
