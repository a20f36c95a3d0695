#include "tpr/encodings.hpp"

#include <cstring>
#include <random>
#include <stdexcept>
#include <set>

#include "tpr/parallel.hpp"

namespace tpr {

const char* to_string(Source s) {
  switch (s) {
    case Source::RandomCoding: return "random-coding";
    case Source::OOD: return "ood";
    case Source::External: return "external";
  }
  return "?";
}

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Source> parse_source(const std::string& s) {
  for (Source v : {Source::RandomCoding, Source::OOD, Source::External})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

std::optional<Split> parse_split(const std::string& s) {
  for (Split v : {Split::Train, Split::Val, Split::Test})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

bool same_content(const Dataset& a, const Dataset& b) {
  if (a.d_model != b.d_model || a.source != b.source || a.split != b.split ||
      a.layer != b.layer || a.labels != b.labels)
    return false;
  if (a.activations.rows() != b.activations.rows() || a.activations.cols() != b.activations.cols())
    return false;
  const auto n = static_cast<std::size_t>(a.activations.size());
  return n == 0 || std::memcmp(a.activations.data(), b.activations.data(), n * sizeof(float)) == 0;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RandomCodingBook RandomCodingBook::generate(int d_model, std::uint64_t seed) {
  RandomCodingBook book;
  book.seed = seed;
  book.q.resize(othello::kNumSquares * othello::kNumColors, d_model);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < book.q.rows(); ++r)
    for (Eigen::Index c = 0; c < book.q.cols(); ++c) book.q(r, c) = normal(rng);
  return book;
}

Eigen::VectorXd random_coding_encode(const RandomCodingBook& book, const Labels& labels) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(book.d_model());
  for (int s = 0; s < othello::kNumSquares; ++s) {
    h += book.q.row(3 * s + static_cast<int>(labels[s])).transpose();
  }
  return h;
}

Labels sample_ood_labels(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> color(0, 2);
  Labels labels;
  for (auto& l : labels) l = static_cast<CellColor>(color(rng));
  return labels;
}

namespace {

void encode_all(Dataset& d, const RandomCodingBook& book) {
  d.activations.resize(static_cast<Eigen::Index>(d.labels.size()), book.d_model());
  parallel_for(d.labels.size(), [&](std::size_t i) {
    d.activations.row(static_cast<Eigen::Index>(i)) =
        random_coding_encode(book, d.labels[i]).transpose().cast<float>();
  });
}

Dataset game_split(Split split, std::size_t n, std::uint64_t seed,
                   std::set<othello::Transcript>& used) {
  Dataset d;
  d.split = split;
  for (std::uint64_t g = 0; d.labels.size() < n; ++g) {
    const std::uint64_t game_seed = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(split)), g);
    othello::Transcript t = othello::random_game(game_seed);
    if (!used.insert(t).second) continue;
    const auto positions = othello::replay(t);
    for (std::size_t ply = 0; ply < positions.size() && d.labels.size() < n; ++ply) {
      d.labels.push_back(othello::egocentric_labels(positions[ply]));
      d.tags.push_back({game_seed, static_cast<int>(ply) + 1});
    }
  }
  return d;
}

Dataset ood_split(Split split, std::size_t n, std::uint64_t seed) {
  Dataset d;
  d.split = split;
  d.labels.resize(n);
  d.tags.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t s = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(split)), i);
    d.labels[i] = sample_ood_labels(s);
    d.tags[i] = {s, 0};
  }
  return d;
}

}  // namespace

DatasetSplits build_dataset(Source source, const RandomCodingBook& book, const DatasetSizes& sizes,
                            std::uint64_t seed) {
  DatasetSplits out;
  if (source == Source::RandomCoding) {
    std::set<othello::Transcript> used;
    out.train = game_split(Split::Train, sizes.train, seed, used);
    out.val = game_split(Split::Val, sizes.val, seed, used);
    out.test = game_split(Split::Test, sizes.test, seed, used);
  } else if (source == Source::OOD) {
    out.train = ood_split(Split::Train, sizes.train, seed);
    out.val = ood_split(Split::Val, sizes.val, seed);
    out.test = ood_split(Split::Test, sizes.test, seed);
  } else {
    throw std::invalid_argument("external datasets are read from files, not generated");
  }
  for (Dataset* d : {&out.train, &out.val, &out.test}) {
    d->source = source;
    d->d_model = book.d_model();
    d->layer = 0;
    encode_all(*d, book);
  }
  return out;
}

}  // namespace tpr
