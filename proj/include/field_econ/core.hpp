#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace field_econ {

// How pairwise sums over agents are scaled. kSum uses the raw sums exactly as
// written; kMean divides every agent sum by N so that prices and forces stay
// O(1) as the population grows.
enum class Normalization { kSum, kMean };

struct ModelParams {
  double A = 1.0;
  double A_bar = 20.0;
  double alpha = 0.3;
  double gamma = 0.2;
  double delta = 0.05;
  double kappa = 0.5;
  double d = 1.0;
  double sigma = 0.05;
  double sigma_X = 0.1;
  double vartheta = 0.2;
  double kappa0 = 0.05;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double chi1 = 0.0;
  double chi2 = 0.0;
  double alpha_laplace = 0.0;
  double theta_horizon = 1000.0;
  Normalization normalization = Normalization::kSum;

  // Scale applied to one sum over agents: 1 or 1/N.
  double sum_scale(std::size_t n) const {
    return normalization == Normalization::kMean ? 1.0 / static_cast<double>(n) : 1.0;
  }
};

// Names of the numeric model keys, in config order.
const std::vector<std::string>& model_keys();

// Read/write a numeric field by its config name. Throws std::out_of_range on
// an unknown name.
double get_param(const ModelParams& p, const std::string& name);
void set_param(ModelParams& p, const std::string& name, double value);

struct ParamIssue {
  enum class Kind { kRangeViolation, kMissingField, kTypeError };
  Kind kind;
  std::string name;
  double value = 0.0;
  std::string allowed;
  std::string describe() const;
};

class ParamError : public std::runtime_error {
 public:
  explicit ParamError(std::vector<ParamIssue> issues);
  const std::vector<ParamIssue>& issues() const { return issues_; }

 private:
  std::vector<ParamIssue> issues_;
};

struct ValidatedParams {
  ModelParams params;
  std::vector<std::string> warnings;
};

// Validates every model key of a flat JSON object. Keys that are not model
// keys are ignored (run settings share the same file). Throws ParamError
// listing every violated constraint.
ValidatedParams validate_params(const nlohmann::json& raw);

// Serializes the model keys back to a flat JSON object.
nlohmann::json params_to_json(const ModelParams& p);

nlohmann::json load_json_file(const std::string& path);

enum class ErrorCode {
  kNoConvergence,
  kUnpriced,
  kNegativeDiscriminant,
  kDegenerate,
  kHBoundViolated,
  kNonpositiveFrequency,
  kWrongPhase,
  kNonpositiveTime,
  kInvalidArgument,
};

const char* error_name(ErrorCode code);

class ModelError : public std::runtime_error {
 public:
  ModelError(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct AgentState {
  double K = 0.0;
  double X = 0.0;
  double P = 0.0;  // 0 until priced
};

struct Ensemble {
  std::vector<AgentState> agents;
  long t = 0;

  std::size_t size() const { return agents.size(); }
  std::vector<double> capitals() const;
  std::vector<double> positions() const;
  std::vector<double> prices() const;
};

// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

struct NormalPair {
  double first;
  double second;
};

// One agent's stream. Values are a pure function of (seed, id, purpose,
// index), so draws never depend on which thread asks for them.
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint32_t id) : seed_(seed), id_(id) {}

  std::uint32_t id() const { return id_; }
  NormalPair normal_pair_at(std::uint64_t index, std::uint32_t purpose) const;
  std::array<double, 2> uniform_pair_at(std::uint64_t index, std::uint32_t purpose) const;

  // Sequential interface on purpose channel 0.
  double normal();
  double uniform();

 private:
  std::uint64_t seed_;
  std::uint32_t id_;
  std::uint64_t counter_ = 0;
  std::optional<double> cached_;
};

struct RngStreams {
  std::uint64_t master_seed = 0;
  std::size_t n = 0;
  Substream stream(std::size_t i) const;
};

RngStreams make_streams(std::uint64_t seed, std::size_t n);

// Worker count: explicit request, else FIELD_ECON_THREADS, else hardware
// concurrency.
int resolve_threads(std::optional<int> requested);

}  // namespace field_econ
