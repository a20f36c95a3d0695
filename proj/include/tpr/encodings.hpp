#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpr/othello.hpp"

namespace tpr {

using othello::CellColor;
using othello::Labels;

enum class Source { RandomCoding, OOD, External };
enum class Split { Train, Val, Test };

const char* to_string(Source s);
const char* to_string(Split s);
std::optional<Source> parse_source(const std::string& s);
std::optional<Split> parse_split(const std::string& s);

using ActivationMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Where a generated sample came from. Held in memory only; the dataset file
/// format does not carry it.
struct SampleTag {
  std::uint64_t game = 0;
  int timestep = 0;
};

/// Activations (one row per sample) with their egocentric labels. Everything
/// except `tags` round-trips through the .tprds format.
struct Dataset {
  int d_model = 0;
  Source source = Source::External;
  Split split = Split::Train;
  int layer = 0;
  ActivationMatrix activations;
  std::vector<Labels> labels;
  std::vector<SampleTag> tags;

  std::size_t size() const { return labels.size(); }
  Eigen::VectorXd sample(std::size_t i) const {
    return activations.row(static_cast<Eigen::Index>(i)).transpose().cast<double>();
  }
};

/// Persisted fields are equal bit for bit.
bool same_content(const Dataset& a, const Dataset& b);

/// One random vector q_{s,c} per (square, colour). Row 3*s + c of `q`.
struct RandomCodingBook {
  std::uint64_t seed = 0;
  Eigen::MatrixXd q;

  int d_model() const { return static_cast<int>(q.cols()); }
  static RandomCodingBook generate(int d_model, std::uint64_t seed);
};

/// Sum of the 64 square-colour vectors selected by `labels`.
Eigen::VectorXd random_coding_encode(const RandomCodingBook& book, const Labels& labels);

/// Independent uniform colour per square; no legality constraint.
Labels sample_ood_labels(std::uint64_t seed);

struct DatasetSizes {
  std::size_t train = 50'000;
  std::size_t val = 512;
  std::size_t test = 1'000;
};

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// RandomCoding: labels from every position of uniformly random games, each
/// game feeding a single split. OOD: labels from sample_ood_labels. Both are
/// encoded with `book`.
DatasetSplits build_dataset(Source source, const RandomCodingBook& book, const DatasetSizes& sizes,
                            std::uint64_t seed);

/// Deterministic 64-bit seed derivation (splitmix64 finaliser).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// .tprds format: JSON header line, then `count` records of d_model f32le
// values followed by 64 label bytes. Throws FormatError.
void write_dataset(std::ostream& os, const Dataset& d);
void write_dataset(const std::string& path, const Dataset& d);
Dataset read_dataset(std::istream& is, std::optional<int> expected_d_model = std::nullopt);
Dataset read_dataset(const std::string& path, std::optional<int> expected_d_model = std::nullopt);

}  // namespace tpr
