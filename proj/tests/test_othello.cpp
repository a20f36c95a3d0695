#include <doctest.h>

#include <array>
#include <set>
#include <sstream>

#include "tpr/errors.hpp"
#include "tpr/othello.hpp"
#include "othello_oracle.hpp"

using namespace tpr::othello;
using namespace tpr::oracle;

namespace {

Square sq(const char* tok) { return *Square::parse(tok); }

}  // namespace

TEST_CASE("square index, row/col and token form a bijection") {
  std::set<std::string> tokens;
  for (int idx = 1; idx <= 64; ++idx) {
    const Square s = Square::from_index(idx);
    CHECK(s.index() == idx);
    CHECK(idx == 8 * (s.row() - 1) + s.col());
    CHECK(Square::from_row_col(s.row(), s.col()) == s);
    const auto back = Square::parse(s.token());
    REQUIRE(back.has_value());
    CHECK(*back == s);
    tokens.insert(s.token());
  }
  CHECK(tokens.size() == 64);
  CHECK(sq("D3").row() == 4);
  CHECK(sq("D3").col() == 3);
  CHECK(sq("D3").index() == 27);
  CHECK_FALSE(Square::parse("I1").has_value());
  CHECK_FALSE(Square::parse("A9").has_value());
  CHECK_FALSE(Square::parse("d3").has_value());
}

TEST_CASE("initial board") {
  const Board b = initial_board();
  int vacant = 0;
  for (int p = 0; p < 64; ++p) vacant += b.at(Square::from_pos(p)) == Disc::Vacant;
  CHECK(vacant == 60);
  CHECK(b.at(sq("D4")) == Disc::White);
  CHECK(b.at(sq("E5")) == Disc::White);
  CHECK(b.at(sq("D5")) == Disc::Black);
  CHECK(b.at(sq("E4")) == Disc::Black);
  CHECK(b.to_move() == Player::Black);
}

TEST_CASE("opening legal moves match the independent engine") {
  const auto moves = legal_moves(initial_board()).squares();
  std::set<std::string> got;
  for (Square s : moves) got.insert(s.token());
  CHECK(got == std::set<std::string>{"C4", "D3", "E6", "F5"});

  std::set<std::string> oracle;
  for (auto [r, c] : slow_moves(slow_start(), 1)) oracle.insert(Square::from_row_col(r + 1, c + 1).token());
  CHECK(got == oracle);
}

TEST_CASE("legal moves on full and blocked boards are empty") {
  Board full(~std::uint64_t{0}, 0, Player::Black);
  CHECK(legal_moves(full).empty());
  // only own discs: nothing to flip
  Board lonely(kCenterMask, 0, Player::Black);
  CHECK(legal_moves(lonely).empty());
}

TEST_CASE("apply_move flips and passes the turn") {
  const Board b0 = initial_board();
  const Board b1 = apply_move(b0, sq("D3"));
  CHECK(b1.at(sq("D4")) == Disc::Black);
  CHECK(std::popcount(b1.black()) == 4);
  CHECK(b1.disc_count() == b0.disc_count() + 1);
  CHECK(b1.to_move() == Player::White);
  CHECK(b0 == initial_board());
  CHECK_THROWS_AS(apply_move(b0, sq("A1")), tpr::IllegalMove);
  CHECK_THROWS_AS(apply_move(b0, sq("D4")), tpr::IllegalMove);
}

TEST_CASE("apply_move retains the turn when the opponent must pass") {
  // Black at A1, white at A2, black to move plays A3 capturing the only white disc.
  Board b(Square::from_row_col(1, 1).bit(), Square::from_row_col(1, 2).bit(), Player::Black);
  const Board after = apply_move(b, Square::from_row_col(1, 3));
  CHECK(after.white() == 0);
  CHECK(after.to_move() == Player::Black);  // nobody can move, turn retained
  CHECK(legal_moves(after).empty());
}

TEST_CASE("egocentric labels") {
  const Board b = initial_board();
  const Labels l = egocentric_labels(b);
  CHECK(l[sq("D5").pos()] == CellColor::Current);
  CHECK(l[sq("E4").pos()] == CellColor::Current);
  CHECK(l[sq("D4").pos()] == CellColor::Opponent);
  CHECK(l[sq("E5").pos()] == CellColor::Opponent);
  int empty = 0;
  for (auto c : l) empty += c == CellColor::Empty;
  CHECK(empty == 60);

  Board flipped = b;
  flipped.set_to_move(Player::White);
  const Labels lf = egocentric_labels(flipped);
  for (int p = 0; p < 64; ++p) {
    if (l[p] == CellColor::Empty) CHECK(lf[p] == CellColor::Empty);
    if (l[p] == CellColor::Current) CHECK(lf[p] == CellColor::Opponent);
    if (l[p] == CellColor::Opponent) CHECK(lf[p] == CellColor::Current);
  }

  for (auto c : egocentric_labels(Board{})) CHECK(c == CellColor::Empty);
  CHECK(egocentric_labels(board_from_labels(l)) == l);
}

TEST_CASE("random games are deterministic legal playouts") {
  const std::set<std::string> opening{"C4", "D3", "E6", "F5"};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Transcript t = random_game(seed);
    CHECK(t == random_game(seed));
    REQUIRE(!t.empty());
    CHECK(t.size() <= 60);
    CHECK(opening.count(t.front().token()) == 1);
    Board b = initial_board();
    for (std::size_t i = 0; i < t.size(); ++i) {
      REQUIRE(legal_moves(b).contains(t[i]));
      CHECK_FALSE(SquareSet(b.occupied()).contains(t[i]));
      b = apply_move(b, t[i]);
      CHECK(b.disc_count() == 4 + static_cast<int>(i) + 1);
      CHECK((b.occupied() & kCenterMask) == kCenterMask);
      CHECK(passes_island_check(b));
    }
    if (t.size() < 60) CHECK(legal_moves(b).empty());
  }
  CHECK(random_game(3, 10).size() == 10);
}

TEST_CASE("game tree counts match the slow enumerator") {
  const std::uint64_t expected[] = {4, 12, 56, 244, 1396, 8200};
  for (int d = 1; d <= 6; ++d) {
    CHECK(game_tree_count(d) == expected[d - 1]);
    CHECK(game_tree_count(d) == slow_count(slow_start(), d));
  }
}

TEST_CASE("island check") {
  CHECK(passes_island_check(initial_board()));
  Board corner = initial_board();
  corner.set(Square::from_row_col(1, 1), Disc::Black);
  CHECK_FALSE(passes_island_check(corner));
  Board diag = initial_board();
  diag.set(sq("C3"), Disc::White);  // touches D4 diagonally
  CHECK(passes_island_check(diag));
  Board hole = initial_board();
  hole.set(sq("D4"), Disc::Vacant);
  CHECK_FALSE(passes_island_check(hole));
}

TEST_CASE("make_target_board edits one cell and changes the move set") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto positions = replay(random_game(seed));
    const Board& b = positions[positions.size() / 2];
    const TargetBoard t = make_target_board(b, seed);
    REQUIRE(t.edits.size() == 1);
    const std::uint64_t diff = (t.board.black() ^ b.black()) | (t.board.white() ^ b.white());
    CHECK(std::popcount(diff) == 1);
    CHECK(diff == t.edits[0].square.bit());
    CHECK_FALSE(t.edits[0].square.is_center());
    CHECK(t.edits[0].from != t.edits[0].to);
    CHECK(t.edits[0].from == egocentric_labels(b)[t.edits[0].square.pos()]);
    CHECK(t.edits[0].to == egocentric_labels(t.board)[t.edits[0].square.pos()]);
    CHECK(legal_moves(t.board) != legal_moves(b));
    CHECK(passes_island_check(t.board));
    CHECK(make_target_board(b, seed).board == t.board);
    ++checked;
  }
  CHECK(checked == 40);

  const auto positions = replay(random_game(11));
  const TargetBoard t3 = make_target_board(positions.back(), 5, 3);
  CHECK(t3.edits.size() == 3);
  CHECK(legal_moves(t3.board) != legal_moves(positions.back()));

  CHECK_THROWS_AS(make_target_board(initial_board(), 1), tpr::NoValidTarget);
}

TEST_CASE("transcript text roundtrip") {
  std::vector<Transcript> games{random_game(1), random_game(2)};
  std::stringstream ss;
  write_transcripts(ss, games);
  CHECK(read_transcripts(ss) == games);
  CHECK(format_transcript(parse_transcript("D3 C5 F6")) == "D3 C5 F6");
  CHECK_THROWS_AS(parse_transcript("D3 Z9"), tpr::FormatError);
}
