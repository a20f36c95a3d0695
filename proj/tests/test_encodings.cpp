#include <doctest.h>

#include <array>
#include <set>
#include <sstream>

#include "tpr/encodings.hpp"
#include "tpr/errors.hpp"

using namespace tpr;
using othello::kNumSquares;

namespace {

Labels all(CellColor c) {
  Labels l;
  l.fill(c);
  return l;
}

std::array<double, 3> color_frequencies(const std::vector<Labels>& labels) {
  std::array<double, 3> f{};
  for (const auto& l : labels)
    for (auto c : l) f[static_cast<int>(c)] += 1.0;
  const double n = static_cast<double>(labels.size()) * kNumSquares;
  for (auto& x : f) x /= n;
  return f;
}

}  // namespace

TEST_CASE("random coding encode is linear in the label assignment") {
  const auto book = RandomCodingBook::generate(32, 4);
  CHECK(book.q.rows() == 192);
  Labels a = sample_ood_labels(1);
  Labels b = a;
  const int s = 17;
  a[s] = CellColor::Current;
  b[s] = CellColor::Empty;
  const Eigen::VectorXd diff = random_coding_encode(book, a) - random_coding_encode(book, b);
  const Eigen::VectorXd expected = book.q.row(3 * s + 1) - book.q.row(3 * s + 0);
  CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(random_coding_encode(book, a) == random_coding_encode(book, a));

  // several differing squares
  const Labels x = sample_ood_labels(8);
  const Labels y = sample_ood_labels(9);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(32);
  for (int sq = 0; sq < kNumSquares; ++sq) {
    if (x[sq] != y[sq]) {
      sum += (book.q.row(3 * sq + static_cast<int>(x[sq])) - book.q.row(3 * sq + static_cast<int>(y[sq]))).transpose();
    }
  }
  CHECK((random_coding_encode(book, x) - random_coding_encode(book, y) - sum).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("codebook is deterministic given the seed") {
  CHECK(RandomCodingBook::generate(16, 3).q == RandomCodingBook::generate(16, 3).q);
  CHECK(RandomCodingBook::generate(16, 3).q != RandomCodingBook::generate(16, 4).q);
}

TEST_CASE("expected squared norm of an encoding is about 64 * d_model") {
  const int d = 512;
  const auto book = RandomCodingBook::generate(d, 99);
  double mean = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) mean += random_coding_encode(book, sample_ood_labels(1000 + i)).squaredNorm();
  mean /= n;
  CHECK(mean == doctest::Approx(64.0 * d).epsilon(0.05));
}

TEST_CASE("OOD labels are uniform and unconstrained") {
  std::vector<Labels> draws;
  for (int i = 0; i < 10000; ++i) draws.push_back(sample_ood_labels(i));
  for (double f : color_frequencies(draws)) {
    CHECK(f >= 0.32);
    CHECK(f <= 0.35);
  }
  CHECK(sample_ood_labels(5) == sample_ood_labels(5));
  bool center_empty = false;
  const int center = othello::Square::from_row_col(4, 4).pos();
  for (const auto& l : draws) center_empty |= l[center] == CellColor::Empty;
  CHECK(center_empty);
}

TEST_CASE("build_dataset honours sizes and keeps games out of multiple splits") {
  const auto book = RandomCodingBook::generate(24, 1);
  const DatasetSizes sizes{700, 130, 210};
  const auto rc = build_dataset(Source::RandomCoding, book, sizes, 5);
  CHECK(rc.train.size() == 700);
  CHECK(rc.val.size() == 130);
  CHECK(rc.test.size() == 210);
  CHECK(rc.train.activations.rows() == 700);
  CHECK(rc.train.d_model == 24);
  CHECK(rc.test.split == Split::Test);
  CHECK(rc.train.source == Source::RandomCoding);

  std::set<std::uint64_t> train_games, val_games, test_games;
  for (auto& t : rc.train.tags) train_games.insert(t.game);
  for (auto& t : rc.val.tags) val_games.insert(t.game);
  for (auto& t : rc.test.tags) test_games.insert(t.game);
  for (auto g : val_games) CHECK(train_games.count(g) == 0);
  for (auto g : test_games) {
    CHECK(train_games.count(g) == 0);
    CHECK(val_games.count(g) == 0);
  }

  // every record is the codebook encoding of its labels
  for (std::size_t i = 0; i < rc.val.size(); i += 13) {
    const Eigen::VectorXf expect = random_coding_encode(book, rc.val.labels[i]).cast<float>();
    CHECK(rc.val.activations.row(static_cast<Eigen::Index>(i)).transpose() == expect);
  }

  const auto again = build_dataset(Source::RandomCoding, book, sizes, 5);
  CHECK(same_content(again.train, rc.train));
  CHECK(same_content(again.test, rc.test));
}

TEST_CASE("game-state label marginals are skewed, OOD marginals uniform") {
  const auto book = RandomCodingBook::generate(8, 1);
  const auto rc = build_dataset(Source::RandomCoding, book, {3000, 10, 10}, 2);
  const auto ood = build_dataset(Source::OOD, book, {3000, 10, 10}, 2);
  const auto frc = color_frequencies(rc.train.labels);
  const auto food = color_frequencies(ood.train.labels);
  CHECK(frc[0] > 0.4);
  CHECK(std::abs(frc[1] - frc[2]) < 0.1);
  for (double f : food) CHECK(f == doctest::Approx(1.0 / 3).epsilon(0.05));
  CHECK(ood.train.source == Source::OOD);

  // early positions are dominated by Empty
  std::size_t early = 0, early_empty = 0;
  for (std::size_t i = 0; i < rc.train.size(); ++i) {
    if (rc.train.tags[i].timestep > 10) continue;
    for (auto c : rc.train.labels[i]) early_empty += c == CellColor::Empty;
    early += kNumSquares;
  }
  CHECK(static_cast<double>(early_empty) / static_cast<double>(early) > 0.75);
}

TEST_CASE("dataset file roundtrip and format arithmetic") {
  const auto book = RandomCodingBook::generate(40, 3);
  const Dataset d = build_dataset(Source::RandomCoding, book, {100, 1, 1}, 9).train;
  std::stringstream ss;
  write_dataset(ss, d);
  const std::string bytes = ss.str();
  const auto header_end = bytes.find('\n');
  CHECK(bytes.size() - header_end - 1 == 100u * (40 * 4 + 64));
  const Dataset back = read_dataset(ss);
  CHECK(same_content(back, d));

  std::stringstream again;
  write_dataset(again, back);
  CHECK(again.str() == bytes);
}

TEST_CASE("dataset header layout at d_model 512") {
  Dataset d;
  d.d_model = 512;
  d.source = Source::External;
  d.split = Split::Test;
  d.layer = 6;
  d.activations = ActivationMatrix::Random(3, 512);
  d.labels = {all(CellColor::Empty), all(CellColor::Current), all(CellColor::Opponent)};
  std::stringstream ss;
  write_dataset(ss, d);
  const std::string bytes = ss.str();
  const auto nl = bytes.find('\n');
  CHECK(bytes.substr(0, nl) ==
        R"({"magic":"tprds","version":1,"d_model":512,"count":3,"source":"external","split":"test","layer":6,"dtype":"f32le"})");
  CHECK(bytes.size() - nl - 1 == 3u * (512 * 4 + 64));
  // first float is little endian
  const float first = d.activations(0, 0);
  std::uint32_t bits;
  std::memcpy(&bits, &first, 4);
  CHECK(static_cast<unsigned char>(bytes[nl + 1]) == (bits & 0xFF));
  CHECK(static_cast<unsigned char>(bytes[nl + 4]) == (bits >> 24));
  // labels of record 1 are all Current
  CHECK(bytes[nl + 1 + (512 * 4 + 64) + 512 * 4] == 1);

  std::stringstream in(bytes);
  CHECK(same_content(read_dataset(in, 512), d));
  std::stringstream wrong(bytes);
  CHECK_THROWS_AS(read_dataset(wrong, 256), FormatError);
}

TEST_CASE("malformed dataset files are rejected") {
  Dataset d;
  d.d_model = 4;
  d.activations = ActivationMatrix::Zero(2, 4);
  d.labels = {all(CellColor::Empty), all(CellColor::Empty)};
  std::stringstream ss;
  write_dataset(ss, d);
  const std::string good = ss.str();

  auto fails = [](const std::string& text) {
    std::stringstream in(text);
    CHECK_THROWS_AS(read_dataset(in), FormatError);
  };
  fails(good.substr(0, good.size() - 10));  // truncated
  fails(good + std::string(80, '\0'));       // more records than declared
  fails("not json\n");
  fails("");
  std::string bad_magic = good;
  bad_magic.replace(bad_magic.find("tprds"), 5, "xxxxx");
  fails(bad_magic);
  std::string bad_count = good;
  bad_count.replace(bad_count.find("\"count\":2"), 9, "\"count\":3");
  fails(bad_count);
  std::string bad_label = good;
  bad_label.back() = 7;
  fails(bad_label);
}
