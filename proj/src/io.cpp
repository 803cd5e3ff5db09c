#include "cfisac/io.hpp"

#include <json.hpp>

#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace cfisac {

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Token {
  std::string text;
  int col = 0;
};

// Splits "key = v1 v2 ..." with column tracking; '#' starts a comment.
struct Line {
  std::string key;
  int key_col = 0;
  std::vector<Token> values;
  int number = 0;
  bool blank = true;
};

Line split_line(const std::string& raw, int number) {
  Line ln;
  ln.number = number;
  std::string s = raw;
  const auto hash = s.find('#');
  if (hash != std::string::npos) s = s.substr(0, hash);
  size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  skip_ws();
  if (i >= s.size()) return ln;
  ln.blank = false;
  ln.key_col = static_cast<int>(i) + 1;
  const size_t key_start = i;
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '=') ++i;
  ln.key = s.substr(key_start, i - key_start);
  skip_ws();
  if (i >= s.size() || s[i] != '=') {
    throw ParseError("expected '=' after key '" + ln.key + "'", number,
                     static_cast<int>(i) + 1);
  }
  ++i;
  while (true) {
    skip_ws();
    if (i >= s.size()) break;
    const size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    ln.values.push_back({s.substr(start, i - start), static_cast<int>(start) + 1});
  }
  if (ln.values.empty()) {
    throw ParseError("key '" + ln.key + "' has no value", number,
                     static_cast<int>(s.size()) + 1);
  }
  return ln;
}

double parse_num(const Line& ln, const Token& t) {
  try {
    size_t pos = 0;
    const double v = std::stod(t.text, &pos);
    if (pos != t.text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("invalid number '" + t.text + "'", ln.number, t.col);
  }
}

void expect_arity(const Line& ln, size_t n) {
  if (ln.values.size() != n) {
    throw ParseError("key '" + ln.key + "' expects " + std::to_string(n) +
                         " value(s), got " + std::to_string(ln.values.size()),
                     ln.number, ln.values.front().col);
  }
}

json mat_to_json(const arma::cx_mat& m) {
  json re = json::array(), im = json::array();
  for (arma::uword r = 0; r < m.n_rows; ++r) {
    json rr = json::array(), ri = json::array();
    for (arma::uword c = 0; c < m.n_cols; ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

arma::cx_mat mat_from_json(const json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const arma::uword rows = re.size();
  const arma::uword cols = rows > 0 ? re.at(0).size() : 0;
  arma::cx_mat m(rows, cols);
  for (arma::uword r = 0; r < rows; ++r) {
    for (arma::uword c = 0; c < cols; ++c) {
      m(r, c) = cx(re.at(r).at(c).get<double>(), im.at(r).at(c).get<double>());
    }
  }
  return m;
}

json vec_to_json(const arma::cx_vec& v) { return mat_to_json(arma::cx_mat(v)); }

arma::cx_vec vec_from_json(const json& j) { return arma::cx_vec(mat_from_json(j)); }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
  ScenarioConfig cfg;
  cfg.tx_positions.clear();
  cfg.rx_positions.clear();
  cfg.cu_positions.clear();
  cfg.info_eve_positions.clear();
  cfg.sense_eve_positions.clear();

  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const Line ln = split_line(raw, number);
    if (ln.blank) continue;
    auto num1 = [&] {
      expect_arity(ln, 1);
      return parse_num(ln, ln.values[0]);
    };
    auto pos2 = [&] {
      expect_arity(ln, 2);
      return Vec2{parse_num(ln, ln.values[0]), parse_num(ln, ln.values[1])};
    };
    if (ln.key == "field_size_m") {
      expect_arity(ln, 2);
      cfg.field_size_m = {parse_num(ln, ln.values[0]), parse_num(ln, ln.values[1])};
    } else if (ln.key == "n_antennas") {
      cfg.n_antennas = static_cast<int>(num1());
    } else if (ln.key == "pathloss_ref_db") {
      cfg.pathloss_ref_db = num1();
    } else if (ln.key == "pathloss_exp") {
      cfg.pathloss_exp = num1();
    } else if (ln.key == "noise_power_dbm") {
      cfg.noise_power_dbm = num1();
    } else if (ln.key == "rician_factor_db") {
      cfg.rician_factor_db = num1();
    } else if (ln.key == "rcs_variance") {
      cfg.rcs_variance = num1();
    } else if (ln.key == "power_budget_dbm") {
      cfg.power_budget_dbm = num1();
    } else if (ln.key == "sinr_threshold_db") {
      cfg.sinr_threshold_db = num1();
    } else if (ln.key == "info_snr_threshold_db") {
      cfg.info_snr_threshold_db = num1();
    } else if (ln.key == "eavesdrop_prob_threshold") {
      cfg.eavesdrop_prob_threshold = num1();
    } else if (ln.key == "false_alarm_prob") {
      cfg.false_alarm_prob = num1();
    } else if (ln.key == "symbol_count") {
      cfg.symbol_count = static_cast<long long>(num1());
    } else if (ln.key == "rng_seed") {
      cfg.rng_seed = static_cast<std::uint64_t>(num1());
    } else if (ln.key == "target_position") {
      cfg.target_position = pos2();
    } else if (ln.key == "tx_position") {
      cfg.tx_positions.push_back(pos2());
    } else if (ln.key == "rx_position") {
      cfg.rx_positions.push_back(pos2());
    } else if (ln.key == "cu_position") {
      cfg.cu_positions.push_back(pos2());
    } else if (ln.key == "info_eve_position") {
      cfg.info_eve_positions.push_back(pos2());
    } else if (ln.key == "sense_eve_position") {
      cfg.sense_eve_positions.push_back(pos2());
    } else {
      throw ParseError("unknown key '" + ln.key + "'", ln.number, ln.key_col);
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  if (path == "default") return default_scenario();
  return parse_scenario_text(slurp(path));
}

void write_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << canonical_scenario_text(cfg);
}

const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::PowerDbm: return "power_dbm";
    case SweepParameter::SinrDb: return "sinr_db";
    case SweepParameter::EavesdropLambda: return "eavesdrop_lambda";
    case SweepParameter::NTransmitters: return "n_transmitters";
  }
  return "unknown";
}

void SweepSpec::validate() const {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  if (designs.empty()) throw std::invalid_argument("sweep design list is empty");
  if (seeds.empty()) throw std::invalid_argument("sweep seed list is empty");
  if (parameter == SweepParameter::NTransmitters) {
    for (double v : grid) {
      if (v < 1.0 || v != std::floor(v)) {
        throw std::invalid_argument("n_transmitters grid values must be positive integers");
      }
    }
  }
  if (parameter == SweepParameter::EavesdropLambda) {
    for (double v : grid) {
      if (!(v > 0.0 && v < 1.0)) {
        throw std::invalid_argument("eavesdrop_lambda grid values must lie in (0,1)");
      }
    }
  }
}

SweepSpec parse_sweep_spec_text(const std::string& text, const std::string& base_dir) {
  SweepSpec spec;
  spec.base = default_scenario();
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  bool have_parameter = false;
  while (std::getline(in, raw)) {
    ++number;
    const Line ln = split_line(raw, number);
    if (ln.blank) continue;
    if (ln.key == "scenario") {
      expect_arity(ln, 1);
      const std::string& p = ln.values[0].text;
      if (p == "default") {
        spec.base = default_scenario();
      } else {
        namespace fs = std::filesystem;
        fs::path path(p);
        if (path.is_relative() && !base_dir.empty()) path = fs::path(base_dir) / path;
        spec.base = load_scenario(path.string());
      }
    } else if (ln.key == "parameter") {
      expect_arity(ln, 1);
      const std::string& t = ln.values[0].text;
      if (t == "power_dbm") spec.parameter = SweepParameter::PowerDbm;
      else if (t == "sinr_db") spec.parameter = SweepParameter::SinrDb;
      else if (t == "eavesdrop_lambda") spec.parameter = SweepParameter::EavesdropLambda;
      else if (t == "n_transmitters") spec.parameter = SweepParameter::NTransmitters;
      else throw ParseError("unknown sweep parameter '" + t + "'", ln.number, ln.values[0].col);
      have_parameter = true;
    } else if (ln.key == "grid") {
      for (const auto& t : ln.values) spec.grid.push_back(parse_num(ln, t));
    } else if (ln.key == "designs") {
      for (const auto& t : ln.values) {
        const auto d = design_from_string(t.text);
        if (!d) throw ParseError("unknown design '" + t.text + "'", ln.number, t.col);
        spec.designs.push_back(*d);
      }
    } else if (ln.key == "seeds") {
      for (const auto& t : ln.values) {
        spec.seeds.push_back(static_cast<std::uint64_t>(parse_num(ln, t)));
      }
    } else if (ln.key == "total_power_mode") {
      expect_arity(ln, 1);
      const std::string& t = ln.values[0].text;
      if (t == "true" || t == "1") spec.total_power_mode = true;
      else if (t == "false" || t == "0") spec.total_power_mode = false;
      else throw ParseError("total_power_mode expects true/false", ln.number, ln.values[0].col);
    } else {
      throw ParseError("unknown key '" + ln.key + "'", ln.number, ln.key_col);
    }
  }
  if (!have_parameter) throw ParseError("sweep spec is missing 'parameter'", number, 1);
  spec.validate();
  return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
  return parse_sweep_spec_text(slurp(path),
                               std::filesystem::path(path).parent_path().string());
}

ScenarioConfig scenario_for_cell(const SweepSpec& spec, double value,
                                 std::uint64_t seed) {
  ScenarioConfig cfg = spec.base;
  cfg.rng_seed = seed;
  switch (spec.parameter) {
    case SweepParameter::PowerDbm:
      cfg.power_budget_dbm = value;
      break;
    case SweepParameter::SinrDb:
      cfg.sinr_threshold_db = value;
      break;
    case SweepParameter::EavesdropLambda:
      cfg.eavesdrop_prob_threshold = value;
      break;
    case SweepParameter::NTransmitters: {
      const int mt = static_cast<int>(value);
      Rng rng = Rng(seed).fork(0x5eedf00d, mt);
      cfg.tx_positions.clear();
      for (int i = 0; i < mt; ++i) {
        cfg.tx_positions.push_back({rng.uniform() * cfg.field_size_m[0],
                                    rng.uniform() * cfg.field_size_m[1]});
      }
      break;
    }
  }
  if (spec.total_power_mode) {
    cfg.power_budget_dbm =
        spec.base.power_budget_dbm - 10.0 * std::log10(static_cast<double>(cfg.m_t()));
  }
  return cfg;
}

SweepResult run_sweep(const SweepSpec& spec, bool parallel) {
  spec.validate();
  struct Cell {
    double value;
    Design design;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double v : spec.grid) {
    for (Design d : spec.designs) {
      for (std::uint64_t s : spec.seeds) cells.push_back({v, d, s});
    }
  }
  SweepResult result;
  result.rows.resize(cells.size());
  const long long n = static_cast<long long>(cells.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long i = 0; i < n; ++i) {
    const Cell& cell = cells[i];
    SweepRow row;
    row.parameter = to_string(spec.parameter);
    row.value = cell.value;
    row.design = to_string(cell.design);
    row.seed = cell.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const ScenarioConfig cfg = scenario_for_cell(spec, cell.value, cell.seed);
      const ChannelSet ch = synthesize_channels(cfg);
      const BeamformingSolution sol = solve_design(cfg, ch, cell.design);
      row.p_d = sol.detection_probability;
      row.objective = sol.objective_value;
      row.status = "optimal";
    } catch (const DesignInfeasible&) {
      row.status = "infeasible";
    } catch (const std::exception&) {
      row.status = "solver_failure";
    }
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.rows[i] = std::move(row);
  }
  return result;
}

void write_sweep_csv(const SweepResult& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "parameter,value,design,seed,p_d,objective,status,wall_s\n";
  for (const auto& row : r.rows) {
    os << row.parameter << ',' << fmt_double(row.value) << ',' << row.design << ','
       << row.seed << ',' << fmt_double(row.p_d) << ',' << fmt_double(row.objective)
       << ',' << row.status << ',' << fmt_double(row.wall_s) << '\n';
  }
}

SweepResult parse_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path);
  if (line != "parameter,value,design,seed,p_d,objective,status,wall_s") {
    throw std::runtime_error("unexpected CSV header in " + path);
  }
  SweepResult r;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 8) {
      throw ParseError("expected 8 CSV fields", number, 1);
    }
    SweepRow row;
    row.parameter = fields[0];
    row.value = std::stod(fields[1]);
    row.design = fields[2];
    row.seed = static_cast<std::uint64_t>(std::stoull(fields[3]));
    row.p_d = std::stod(fields[4]);
    row.objective = std::stod(fields[5]);
    row.status = fields[6];
    row.wall_s = std::stod(fields[7]);
    r.rows.push_back(std::move(row));
  }
  return r;
}

void write_sweep_mean_csv(const SweepResult& r, const std::string& path) {
  struct Key {
    std::string parameter, design;
    double value;
    bool operator<(const Key& o) const {
      return std::tie(parameter, value, design) < std::tie(o.parameter, o.value, o.design);
    }
  };
  struct Acc {
    long long ok = 0, failed = 0;
    double p_d = 0.0, objective = 0.0;
  };
  std::map<Key, Acc> acc;
  std::vector<Key> order;
  for (const auto& row : r.rows) {
    Key k{row.parameter, row.design, row.value};
    if (acc.find(k) == acc.end()) order.push_back(k);
    Acc& a = acc[k];
    if (row.status == "optimal") {
      ++a.ok;
      a.p_d += row.p_d;
      a.objective += row.objective;
    } else {
      ++a.failed;
    }
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "parameter,value,design,n_ok,n_failed,mean_p_d,mean_objective\n";
  for (const auto& k : order) {
    const Acc& a = acc[k];
    const double denom = a.ok > 0 ? static_cast<double>(a.ok) : 1.0;
    os << k.parameter << ',' << fmt_double(k.value) << ',' << k.design << ',' << a.ok
       << ',' << a.failed << ','
       << fmt_double(a.ok > 0 ? a.p_d / denom : std::numeric_limits<double>::quiet_NaN())
       << ','
       << fmt_double(a.ok > 0 ? a.objective / denom
                              : std::numeric_limits<double>::quiet_NaN())
       << '\n';
  }
}

void save_solution_bundle(const BeamformingSolution& sol, const ScenarioConfig& cfg,
                          const std::string& path) {
  json j;
  j["format"] = "cfisac-solution-v1";
  j["scenario_hash"] = hex64(scenario_hash(cfg));
  j["design"] = to_string(sol.design);
  j["objective_value"] = sol.objective_value;
  j["detection_objective"] = sol.detection_objective;
  j["detection_probability"] = sol.detection_probability;
  j["solve_status"] = conic::to_string(sol.solve_status);
  j["iterations"] = sol.iterations;
  j["duality_gap"] = sol.duality_gap;
  j["wall_seconds"] = sol.wall_seconds;
  j["S"] = mat_to_json(sol.S);
  json ws = json::array(), wv = json::array();
  for (const auto& wk : sol.W) ws.push_back(mat_to_json(wk));
  for (const auto& wk : sol.w) wv.push_back(vec_to_json(wk));
  j["W"] = std::move(ws);
  j["w"] = std::move(wv);
  j["sinr"] = sol.sinr;
  j["tx_power"] = sol.tx_power;
  json eave = json::array();
  for (const auto& e : sol.eave) {
    eave.push_back({{"zeta", e.zeta}, {"beta", e.beta}, {"p_eave", e.p_eave},
                    {"gamma_d", e.gamma_d}});
  }
  j["eave"] = std::move(eave);
  j["stats"] = {{"lambda_nc", sol.stats.lambda_nc},
                {"threshold_xi", sol.stats.threshold_xi},
                {"p_fa", sol.stats.p_fa},
                {"p_d", sol.stats.p_d},
                {"objective", sol.stats.objective}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(1) << '\n';
}

BeamformingSolution load_solution_bundle(const std::string& path,
                                         std::uint64_t* scenario_hash_out) {
  json j = json::parse(slurp(path));
  if (j.at("format").get<std::string>() != "cfisac-solution-v1") {
    throw std::runtime_error("unrecognized solution bundle format in " + path);
  }
  BeamformingSolution sol;
  const auto d = design_from_string(j.at("design").get<std::string>());
  if (!d) throw std::runtime_error("unknown design in bundle " + path);
  sol.design = *d;
  sol.objective_value = j.at("objective_value").get<double>();
  sol.detection_objective = j.at("detection_objective").get<double>();
  sol.detection_probability = j.at("detection_probability").get<double>();
  sol.iterations = j.at("iterations").get<int>();
  sol.duality_gap = j.at("duality_gap").get<double>();
  sol.S = mat_from_json(j.at("S"));
  for (const auto& wj : j.at("W")) sol.W.push_back(mat_from_json(wj));
  for (const auto& wj : j.at("w")) sol.w.push_back(vec_from_json(wj));
  sol.R = sol.S;
  for (const auto& wk : sol.W) sol.R += wk;
  sol.R = hermitize(sol.R);
  sol.sinr = j.at("sinr").get<std::vector<double>>();
  sol.tx_power = j.at("tx_power").get<std::vector<double>>();
  for (const auto& ej : j.at("eave")) {
    EavesdropStatistics e;
    e.zeta = ej.at("zeta").get<double>();
    e.beta = ej.at("beta").get<double>();
    e.p_eave = ej.at("p_eave").get<double>();
    e.gamma_d = ej.at("gamma_d").get<double>();
    sol.eave.push_back(e);
  }
  sol.stats.lambda_nc = j.at("stats").at("lambda_nc").get<double>();
  sol.stats.threshold_xi = j.at("stats").at("threshold_xi").get<double>();
  sol.stats.p_fa = j.at("stats").at("p_fa").get<double>();
  sol.stats.p_d = j.at("stats").at("p_d").get<double>();
  sol.stats.objective = j.at("stats").at("objective").get<double>();
  sol.solve_status = conic::SolverResult::Status::Optimal;
  if (scenario_hash_out) {
    *scenario_hash_out =
        std::stoull(j.at("scenario_hash").get<std::string>(), nullptr, 16);
  }
  return sol;
}

void append_jsonl(const std::string& path, const std::string& json_line) {
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot append to " + path);
  os << json_line << '\n';
}

}  // namespace cfisac
