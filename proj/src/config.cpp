#include "ldon/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string_view>

#include "ldon/error.hpp"

namespace ldon {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// Thrown by value parsers; the caller adds the position.
struct BadValue {
  std::string message;
};

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    if (lead) *lead = s.size();
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  if (lead) *lead = b;
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw BadValue{"expected a non-negative integer, got '" + v + "'"};
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw BadValue{"expected a non-negative integer, got '" + v + "'"};
  return out;
}

double parse_real(const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw BadValue{"expected a finite number, got '" + v + "'"};
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw BadValue{"expected true or false, got '" + v + "'"};
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw BadValue{"empty item in list '" + v + "'"};
    out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_same_v<T, std::string>) {
      out += xs[i];
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define LDON_SIZE(KEY, MEMBER) \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_size(v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.MEMBER); }}
#define LDON_REAL(KEY, MEMBER) \
  Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_real(v); }, \
        [](const ExperimentConfig& c) { return format_real(c.MEMBER); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      LDON_SIZE("data.nx", data.grf.nx),
      LDON_SIZE("data.ny", data.grf.ny),
      LDON_SIZE("data.samples", data.samples),
      LDON_SIZE("data.snapshots", data.snapshots),
      LDON_REAL("data.length_scale_x", data.grf.length_x),
      LDON_REAL("data.length_scale_y", data.grf.length_y),
      LDON_REAL("data.variance", data.grf.variance),
      LDON_REAL("data.kle_energy", data.grf.kle_energy),
      LDON_REAL("data.diffusivity", data.diffusivity),
      LDON_REAL("data.reaction_rate", data.reaction_rate),
      LDON_REAL("data.t_final", data.t_final),
      LDON_SIZE("data.steps_per_snapshot", data.steps_per_snapshot),
      LDON_REAL("data.train_fraction", data.train_fraction),
      Field{"data.seed", [](ExperimentConfig& c, const std::string& v) { c.data.grf.seed = parse_u64(v); },
            [](const ExperimentConfig& c) { return std::to_string(c.data.grf.seed); }},
      Field{"reducer.kind",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "mlae") {
                c.reducer_kind = ReducerKind::mlae;
              } else if (v == "pca") {
                c.reducer_kind = ReducerKind::pca;
              } else {
                throw BadValue{"reducer.kind must be mlae or pca, got '" + v + "'"};
              }
            },
            [](const ExperimentConfig& c) { return std::string(c.reducer_kind == ReducerKind::mlae ? "mlae" : "pca"); }},
      LDON_SIZE("reducer.d", reducer_d),
      LDON_SIZE("reducer.epochs", reducer_epochs),
      LDON_SIZE("reducer.batch", reducer_batch),
      LDON_REAL("reducer.lr", reducer_lr),
      Field{"operator.mode",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "latent") {
                c.operator_kind = OperatorKind::latent;
              } else if (v == "full") {
                c.operator_kind = OperatorKind::full;
              } else if (v == "fno") {
                c.operator_kind = OperatorKind::fno;
              } else {
                throw BadValue{"operator.mode must be latent, full or fno, got '" + v + "'"};
              }
            },
            [](const ExperimentConfig& c) {
              switch (c.operator_kind) {
                case OperatorKind::latent: return std::string("latent");
                case OperatorKind::full: return std::string("full");
                case OperatorKind::fno: return std::string("fno");
              }
              return std::string();
            }},
      LDON_SIZE("operator.p", operator_p),
      LDON_SIZE("operator.epochs", operator_epochs),
      LDON_SIZE("operator.batch", operator_batch),
      LDON_REAL("operator.lr", operator_lr),
      Field{"operator.branch",
            [](ExperimentConfig& c, const std::string& v) {
              if (v != "conv" && v != "dense") throw BadValue{"operator.branch must be conv or dense, got '" + v + "'"};
              c.operator_branch = v;
            },
            [](const ExperimentConfig& c) { return c.operator_branch; }},
      Field{"operator.decode_in_loss",
            [](ExperimentConfig& c, const std::string& v) {
              c.decode_in_loss = parse_bool(v);
              if (c.decode_in_loss) {
                throw BadValue{"operator.decode_in_loss = true is not implemented; the loss is computed in latent space"};
              }
            },
            [](const ExperimentConfig& c) { return std::string(c.decode_in_loss ? "true" : "false"); }},
      LDON_SIZE("operator.validate_every", validate_every),
      LDON_SIZE("fno.width", fno_width),
      LDON_SIZE("fno.layers", fno_layers),
      LDON_SIZE("fno.modes", fno_modes),
      LDON_SIZE("fno.epochs", fno_epochs),
      LDON_SIZE("fno.batch", fno_batch),
      LDON_REAL("fno.lr", fno_lr),
      Field{"compare.models",
            [](ExperimentConfig& c, const std::string& v) {
              auto items = split_list(v);
              for (const auto& m : items) {
                if (m != "latent" && m != "full" && m != "fno") {
                  throw BadValue{"compare.models entries must be latent, full or fno, got '" + m + "'"};
                }
              }
              c.compare_models = items;
            },
            [](const ExperimentConfig& c) { return join(c.compare_models); }},
      Field{"compare.d",
            [](ExperimentConfig& c, const std::string& v) {
              c.compare_d.clear();
              for (const auto& item : split_list(v)) c.compare_d.push_back(parse_size(item));
            },
            [](const ExperimentConfig& c) { return join(c.compare_d); }},
      Field{"seeds",
            [](ExperimentConfig& c, const std::string& v) {
              c.seeds.clear();
              for (const auto& item : split_list(v)) c.seeds.push_back(parse_u64(item));
            },
            [](const ExperimentConfig& c) { return join(c.seeds); }},
      Field{"output.dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
            [](const ExperimentConfig& c) { return c.output_dir; }},
  };
  return table;
}

#undef LDON_SIZE
#undef LDON_REAL

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

[[noreturn]] void fail_at(std::size_t line, std::size_t col, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
}

}  // namespace

void ExperimentConfig::validate() {
  warnings.clear();
  if (seeds.empty()) throw ConfigError("seeds: list must not be empty");
  if (reducer_d == 0) throw ConfigError("reducer.d must be positive");
  if (data.grf.nx * data.grf.ny <= reducer_d) {
    throw ConfigError("reducer.d=" + std::to_string(reducer_d) + " must be below the snapshot size " +
                      std::to_string(data.grf.nx * data.grf.ny));
  }
  if (data.samples < 2) throw ConfigError("data.samples must be at least 2");
  if (data.snapshots < 2) throw ConfigError("data.snapshots must be at least 2");
  if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0)) throw ConfigError("data.train_fraction must lie in (0, 1)");
  if (operator_p == 0) throw ConfigError("operator.p must be positive");
  if (reducer_batch == 0 || operator_batch == 0 || fno_batch == 0) throw ConfigError("batch sizes must be positive");
  if (compare_models.empty()) throw ConfigError("compare.models must not be empty");
  for (auto d : compare_d) {
    if (d == 0 || d >= data.grf.nx * data.grf.ny) throw ConfigError("compare.d entry " + std::to_string(d) + " out of range");
  }
  if (!is_perfect_square(reducer_d) && operator_branch == "conv") {
    warnings.push_back("reducer.d=" + std::to_string(reducer_d) +
                       " is not a perfect square; the latent conv branch will fall back to a dense branch");
  }
  for (auto d : compare_d) {
    if (!is_perfect_square(d)) {
      warnings.push_back("compare.d entry " + std::to_string(d) + " is not a perfect square");
    }
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::size_t lead = 0;
    if (trim(line, &lead).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(line_no, lead + 1, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::size_t vlead = 0;
    const std::string value = trim(line.substr(eq + 1), &vlead);
    if (key.empty()) fail_at(line_no, lead + 1, "missing key before '='");
    const Field* f = find_field(key);
    if (!f) fail_at(line_no, lead + 1, "unknown key '" + key + "'");
    if (!seen.insert(key).second) fail_at(line_no, lead + 1, "duplicate key '" + key + "'");
    if (value.empty()) fail_at(line_no, eq + 2, "missing value for '" + key + "'");
    try {
      f->set(cfg, value);
    } catch (const BadValue& e) {
      fail_at(line_no, eq + 2 + vlead, key + ": " + e.message);
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set " + assignment + ": expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const Field* f = find_field(key);
  if (!f) throw ConfigError("--set " + assignment + ": unknown key '" + key + "'");
  try {
    f->set(cfg, value);
  } catch (const BadValue& e) {
    throw ConfigError("--set " + assignment + ": " + e.message);
  }
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  // The output location does not change the experiment.
  for (const auto& f : fields()) {
    if (std::string_view(f.key) == "output.dir") continue;
    for (unsigned char ch : std::string(f.key) + " = " + f.get(cfg) + "\n") {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ldon
