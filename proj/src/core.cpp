#include "field_econ/core.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace field_econ {

namespace {

struct KeySpec {
  const char* name;
  double ModelParams::*field;
  double lo;
  double hi;
  bool lo_open;
  bool hi_open;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const KeySpec kSpecs[] = {
    {"A", &ModelParams::A, 0.0, kInf, true, true},
    {"A_bar", &ModelParams::A_bar, 0.0, kInf, true, true},
    {"alpha", &ModelParams::alpha, 0.0, 1.0, true, true},
    {"gamma", &ModelParams::gamma, 0.0, 1.0, true, true},
    {"delta", &ModelParams::delta, 0.0, 1.0, true, true},
    {"kappa", &ModelParams::kappa, 0.0, 1.0, true, true},
    {"d", &ModelParams::d, 0.0, 2.0, true, false},
    {"sigma", &ModelParams::sigma, 0.0, kInf, true, true},
    {"sigma_X", &ModelParams::sigma_X, 0.0, kInf, false, true},
    {"vartheta", &ModelParams::vartheta, 0.0, kInf, true, true},
    {"kappa0", &ModelParams::kappa0, 0.0, kInf, false, true},
    {"kappa1", &ModelParams::kappa1, 0.0, kInf, false, true},
    {"kappa2", &ModelParams::kappa2, 0.0, kInf, false, true},
    {"chi1", &ModelParams::chi1, 0.0, kInf, false, true},
    {"chi2", &ModelParams::chi2, 0.0, kInf, false, true},
    {"alpha_laplace", &ModelParams::alpha_laplace, 0.0, kInf, false, true},
    {"theta_horizon", &ModelParams::theta_horizon, 0.0, kInf, true, true},
};

std::string interval_text(const KeySpec& s) {
  std::ostringstream os;
  os << (s.lo_open ? "(" : "[") << s.lo << ", ";
  if (std::isinf(s.hi)) {
    os << "inf)";
  } else {
    os << s.hi << (s.hi_open ? ")" : "]");
  }
  return os.str();
}

bool in_range(const KeySpec& s, double v) {
  if (!std::isfinite(v)) return false;
  if (s.lo_open ? v <= s.lo : v < s.lo) return false;
  if (s.hi_open ? v >= s.hi : v > s.hi) return false;
  return true;
}

const KeySpec* find_spec(const std::string& name) {
  for (const auto& s : kSpecs) {
    if (name == s.name) return &s;
  }
  return nullptr;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  // (0, 1]: 53 random bits, shifted by one ulp so log() is always finite.
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

const std::vector<std::string>& model_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : kSpecs) k.emplace_back(s.name);
    return k;
  }();
  return keys;
}

double get_param(const ModelParams& p, const std::string& name) {
  const KeySpec* s = find_spec(name);
  if (!s) throw std::out_of_range("unknown parameter: " + name);
  return p.*(s->field);
}

void set_param(ModelParams& p, const std::string& name, double value) {
  const KeySpec* s = find_spec(name);
  if (!s) throw std::out_of_range("unknown parameter: " + name);
  p.*(s->field) = value;
}

std::string ParamIssue::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kRangeViolation:
      os << "RangeViolation(\"" << name << "\", " << value << ", " << allowed << ")";
      break;
    case Kind::kMissingField:
      os << "MissingField(\"" << name << "\")";
      break;
    case Kind::kTypeError:
      os << "TypeError(\"" << name << "\", expected " << allowed << ")";
      break;
  }
  return os.str();
}

namespace {
std::string join_issues(const std::vector<ParamIssue>& issues) {
  std::string out = "invalid parameters:";
  for (const auto& i : issues) out += " " + i.describe() + ";";
  return out;
}
}  // namespace

ParamError::ParamError(std::vector<ParamIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ValidatedParams validate_params(const nlohmann::json& raw) {
  ValidatedParams out;
  std::vector<ParamIssue> issues;
  if (!raw.is_object()) {
    issues.push_back({ParamIssue::Kind::kTypeError, "<root>", 0.0, "object"});
    throw ParamError(std::move(issues));
  }
  for (const auto& s : kSpecs) {
    auto it = raw.find(s.name);
    if (it == raw.end()) {
      issues.push_back({ParamIssue::Kind::kMissingField, s.name, 0.0, ""});
      continue;
    }
    if (!it->is_number()) {
      issues.push_back({ParamIssue::Kind::kTypeError, s.name, 0.0, "number"});
      continue;
    }
    const double v = it->get<double>();
    if (!in_range(s, v)) {
      issues.push_back({ParamIssue::Kind::kRangeViolation, s.name, v, interval_text(s)});
      continue;
    }
    out.params.*(s.field) = v;
  }
  if (auto it = raw.find("interaction_normalization"); it != raw.end()) {
    if (it->is_string() && *it == "sum") {
      out.params.normalization = Normalization::kSum;
    } else if (it->is_string() && *it == "mean") {
      out.params.normalization = Normalization::kMean;
    } else {
      issues.push_back({ParamIssue::Kind::kTypeError, "interaction_normalization", 0.0,
                        "\"sum\" or \"mean\""});
    }
  }

  const bool have_a = raw.contains("A") && raw.contains("A_bar");
  if (have_a && issues.empty()) {
    const double ratio = out.params.A_bar / out.params.A;
    if (ratio < 10.0) {
      issues.push_back({ParamIssue::Kind::kRangeViolation, "A_bar/A", ratio, "[10, inf)"});
    }
  }
  if (!issues.empty()) throw ParamError(std::move(issues));

  const double g = out.params.gamma;
  if (1.0 / (1.0 - g) > 100.0) {
    std::ostringstream os;
    os << "near-singular: 1/(1-gamma) = " << 1.0 / (1.0 - g) << " exceeds 100";
    out.warnings.push_back(os.str());
  }
  if (out.params.theta_horizon < 10.0) {
    out.warnings.push_back("theta_horizon is expected to be large (>= 10)");
  }
  return out;
}

nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& s : kSpecs) j[s.name] = p.*(s.field);
  j["interaction_normalization"] = p.normalization == Normalization::kMean ? "mean" : "sum";
  return j;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return nlohmann::json::parse(in);
}

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kUnpriced: return "Unpriced";
    case ErrorCode::kNegativeDiscriminant: return "NegativeDiscriminant";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kHBoundViolated: return "HBoundViolated";
    case ErrorCode::kNonpositiveFrequency: return "NonpositiveFrequency";
    case ErrorCode::kWrongPhase: return "WrongPhase";
    case ErrorCode::kNonpositiveTime: return "NonpositiveTime";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

ModelError::ModelError(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

std::vector<double> Ensemble::capitals() const {
  std::vector<double> v(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) v[i] = agents[i].K;
  return v;
}

std::vector<double> Ensemble::positions() const {
  std::vector<double> v(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) v[i] = agents[i].X;
  return v;
}

std::vector<double> Ensemble::prices() const {
  std::vector<double> v(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) v[i] = agents[i].P;
  return v;
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

std::array<double, 2> Substream::uniform_pair_at(std::uint64_t index,
                                                 std::uint32_t purpose) const {
  const auto out = philox4x32({static_cast<std::uint32_t>(index),
                               static_cast<std::uint32_t>(index >> 32), id_, purpose},
                              {static_cast<std::uint32_t>(seed_),
                               static_cast<std::uint32_t>(seed_ >> 32)});
  return {to_unit_open_closed(out[0], out[1]), to_unit_open_closed(out[2], out[3])};
}

NormalPair Substream::normal_pair_at(std::uint64_t index, std::uint32_t purpose) const {
  // Box-Muller on one Philox block.
  const auto u = uniform_pair_at(index, purpose);
  const double r = std::sqrt(-2.0 * std::log(u[0]));
  const double phi = 2.0 * std::numbers::pi * u[1];
  return {r * std::cos(phi), r * std::sin(phi)};
}

double Substream::normal() {
  if (cached_) {
    const double v = *cached_;
    cached_.reset();
    return v;
  }
  const NormalPair p = normal_pair_at(counter_++, 0);
  cached_ = p.second;
  return p.first;
}

double Substream::uniform() {
  return uniform_pair_at(counter_++, 0)[0];
}

Substream RngStreams::stream(std::size_t i) const {
  // Mix the master seed once so that adjacent user seeds give unrelated keys.
  return Substream(splitmix64(master_seed), static_cast<std::uint32_t>(i));
}

RngStreams make_streams(std::uint64_t seed, std::size_t n) {
  return RngStreams{seed, n};
}

int resolve_threads(std::optional<int> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("FIELD_ECON_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace field_econ
