#include "pdlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pdlab/asymptotics.hpp"
#include "pdlab/errors.hpp"
#include "pdlab/exact_laws.hpp"
#include "pdlab/parallel.hpp"
#include "pdlab/rate_functions.hpp"
#include "pdlab/report_io.hpp"
#include "pdlab/sampling.hpp"
#include "pdlab/selection.hpp"

namespace pdlab::cli {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- parsing

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------- schema

enum class Kind { pos_real, real, unit_open, nonneg_real, pos_int, min2_int, min16_int, seed, path, real_list,
                  pos_real_list, pos_int_list, h_choice };

struct KeyInfo {
  Kind kind;
  const char* help;
};

const std::map<std::string, KeyInfo>& key_table() {
  static const std::map<std::string, KeyInfo> table{
      {"theta", {Kind::pos_real, "mutation parameter theta > 0"}},
      {"thetas", {Kind::pos_real_list, "comma list of ascending theta values"}},
      {"x", {Kind::real_list, "evaluation point(s), comma list"}},
      {"k", {Kind::pos_int_list, "rank(s), comma list of positive integers"}},
      {"m", {Kind::min2_int, "homozygosity order m >= 2"}},
      {"c", {Kind::pos_real, "selection constant c > 0"}},
      {"gamma", {Kind::real, "growth exponent"}},
      {"n-samples", {Kind::pos_int, "Monte Carlo sample count"}},
      {"seed", {Kind::seed, "64-bit seed"}},
      {"out", {Kind::path, "output directory"}},
      {"resolution", {Kind::min16_int, "grid resolution (>= 16)"}},
      {"ks-threshold", {Kind::unit_open, "KS distance threshold in (0, 1)"}},
      {"tol", {Kind::pos_real, "relative variance tolerance"}},
      {"h", {Kind::h_choice, "fitness functional: minus_phi or plus_phi"}},
  };
  return table;
}

struct CommandInfo {
  std::vector<std::string> keys;              // allowed besides seed/out
  std::vector<std::string> required;
  std::map<std::string, std::string> defaults;
  const char* help;
};

const std::map<std::string, CommandInfo>& command_table() {
  static const std::map<std::string, CommandInfo> table{
      {"sample", {{"theta", "n-samples", "k"}, {"theta"}, {{"n-samples", "10"}, {"k", "10"}},
                  "draw ranked PD(theta) samples"}},
      {"density", {{"theta", "resolution"}, {"theta"}, {{"resolution", "64"}}, "tabulate the density of P_1"}},
      {"moments", {{"theta", "k", "m"}, {"theta"}, {{"k", "5"}, {"m", "2"}}, "moments of P_k and E[H_m]"}},
      {"rate", {{"x", "resolution"}, {}, {{"resolution", "100"}}, "rate function table"}},
      {"c0", {{}, {}, {}, "critical constant c0"}},
      {"verify-ldp", {{"x", "thetas", "k", "resolution"}, {"x", "thetas"}, {{"k", "1"}, {"resolution", "64"}},
                      "LDP decay of P_k from exact tails"}},
      {"verify-gumbel", {{"thetas", "k", "n-samples", "ks-threshold"}, {"thetas"},
                         {{"k", "1"}, {"n-samples", "10000"}, {"ks-threshold", "0.05"}},
                         "scaling limit of theta P_k - beta(theta)"}},
      {"verify-gaussian", {{"thetas", "m", "n-samples", "tol", "ks-threshold", "c"}, {"thetas"},
                           {{"m", "2"}, {"n-samples", "10000"}, {"tol", "0.15"}, {"ks-threshold", "0.05"}},
                           "Gaussian limit of homozygosity (with --c: speed bound)"}},
      {"verify-gillespie", {{"c", "gamma", "thetas", "n-samples", "ks-threshold"}, {},
                            {{"c", "0.5"}, {"n-samples", "10000"}, {"ks-threshold", "0.05"}},
                            "density ratio regimes of the selection tilt"}},
      {"tilt", {{"theta", "c", "gamma", "h", "m", "n-samples"}, {"theta", "c"},
                {{"gamma", "0"}, {"h", "minus_phi"}, {"m", "2"}, {"n-samples", "1000"}},
                "importance-weighted selection ensemble"}},
      {"phase", {{"c", "gamma", "h", "m", "x"}, {"c", "gamma"}, {{"h", "minus_phi"}, {"m", "2"}},
                 "phase label and rate for alpha = c theta^gamma"}},
  };
  return table;
}

// Converts one raw value; appends a message and returns nullopt on failure.
std::optional<Value> convert(const std::string& key, const std::string& raw, std::vector<std::string>& errors) {
  const auto& info = key_table().at(key);
  auto fail = [&](const std::string& why) -> std::optional<Value> {
    errors.push_back(key + " " + why + " (got '" + raw + "')");
    return std::nullopt;
  };
  switch (info.kind) {
    case Kind::pos_real: {
      const auto v = parse_real(raw);
      if (!v) return fail("must be a real number");
      if (!(*v > 0.0)) return fail("must be positive");
      return Value(*v);
    }
    case Kind::real: {
      const auto v = parse_real(raw);
      if (!v) return fail("must be a real number");
      return Value(*v);
    }
    case Kind::nonneg_real: {
      const auto v = parse_real(raw);
      if (!v) return fail("must be a real number");
      if (!(*v >= 0.0)) return fail("must be non-negative");
      return Value(*v);
    }
    case Kind::unit_open: {
      const auto v = parse_real(raw);
      if (!v) return fail("must be a real number");
      if (!(*v > 0.0 && *v < 1.0)) return fail("must lie in (0, 1)");
      return Value(*v);
    }
    case Kind::pos_int:
    case Kind::min2_int:
    case Kind::min16_int: {
      const auto v = parse_int(raw);
      if (!v) return fail("must be an integer");
      const long long lo = info.kind == Kind::pos_int ? 1 : (info.kind == Kind::min2_int ? 2 : 16);
      if (*v < lo) return fail("must be at least " + std::to_string(lo));
      return Value(*v);
    }
    case Kind::seed: {
      if (raw.empty() || raw.find_first_not_of("0123456789") != std::string::npos) {
        return fail("must be a non-negative 64-bit integer");
      }
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc() || ptr != raw.data() + raw.size()) return fail("must be a non-negative 64-bit integer");
      return Value(raw);
    }
    case Kind::path: {
      if (raw.empty()) return fail("must not be empty");
      return Value(raw);
    }
    case Kind::h_choice: {
      if (raw != "minus_phi" && raw != "plus_phi") return fail("must be minus_phi or plus_phi");
      return Value(raw);
    }
    case Kind::real_list:
    case Kind::pos_real_list: {
      std::vector<double> vs;
      for (const auto& item : split_list(raw)) {
        const auto v = parse_real(item);
        if (!v) return fail("must be a comma list of real numbers");
        if (info.kind == Kind::pos_real_list && !(*v > 0.0)) {
          return fail(key == "thetas" ? "entries must be positive (theta must be positive)" : "entries must be positive");
        }
        vs.push_back(*v);
      }
      if (vs.empty()) return fail("must not be empty");
      if (info.kind == Kind::pos_real_list) {
        for (std::size_t i = 1; i < vs.size(); ++i) {
          if (!(vs[i] > vs[i - 1])) return fail("must be strictly ascending");
        }
      }
      return Value(vs);
    }
    case Kind::pos_int_list: {
      std::vector<long long> vs;
      for (const auto& item : split_list(raw)) {
        const auto v = parse_int(item);
        if (!v || *v < 1) return fail("must be a comma list of positive integers");
        vs.push_back(*v);
      }
      return Value(vs);
    }
  }
  return fail("has an unsupported type");
}

// Command-specific constraints on already converted values.
void check_command(const std::string& cmd, const std::map<std::string, Value>& v, std::vector<std::string>& errors) {
  auto reals = [&](const char* k) -> const std::vector<double>* {
    auto it = v.find(k);
    return it == v.end() ? nullptr : std::get_if<std::vector<double>>(&it->second);
  };
  auto ints = [&](const char* k) -> const std::vector<long long>* {
    auto it = v.find(k);
    return it == v.end() ? nullptr : std::get_if<std::vector<long long>>(&it->second);
  };
  auto num = [&](const char* k) -> std::optional<double> {
    auto it = v.find(k);
    if (it == v.end()) return std::nullopt;
    if (auto d = std::get_if<double>(&it->second)) return *d;
    if (auto i = std::get_if<long long>(&it->second)) return static_cast<double>(*i);
    return std::nullopt;
  };
  auto single_k = [&](std::initializer_list<long long> allowed) {
    if (const auto* k = ints("k")) {
      if (k->size() != 1) {
        errors.emplace_back("k must be a single integer for " + cmd);
      } else if (std::find(allowed.begin(), allowed.end(), k->front()) == allowed.end()) {
        errors.emplace_back("k is out of range for " + cmd);
      }
    }
  };

  if (cmd == "sample" || cmd == "moments") {
    if (const auto* k = ints("k"); k && k->size() != 1) errors.emplace_back("k must be a single integer");
  }
  if (cmd == "verify-ldp") {
    single_k({1, 2, 3});
    const auto* th = reals("thetas");
    if (th && th->size() < 2) errors.emplace_back("thetas must contain at least two values for verify-ldp");
    if (const auto* x = reals("x")) {
      if (x->size() != 1) {
        errors.emplace_back("x must be a single value for verify-ldp");
      } else if (!(x->front() >= 0.0 && x->front() < 1.0)) {
        errors.emplace_back("x must lie in [0, 1)");
      }
    }
  }
  if (cmd == "verify-gumbel") {
    if (const auto* th = reals("thetas")) {
      for (double t : *th) {
        if (!(t > std::numbers::e)) {
          errors.emplace_back("thetas must exceed e for verify-gumbel");
          break;
        }
      }
    }
  }
  if (cmd == "verify-gaussian") {
    if (num("n-samples") && *num("n-samples") < 2) errors.emplace_back("n-samples must be at least 2");
    if (auto c = num("c"); c && reals("thetas") && num("m")) {
      const double t = reals("thetas")->back();
      const int m = static_cast<int>(*num("m"));
      if ((m - 1) * std::log(t) < std::lgamma(static_cast<double>(m)) + std::log1p(*c)) {
        errors.emplace_back("c is too large: theta^(m-1) must be at least Gamma(m)(1+c)");
      }
    }
  }
  if (cmd == "verify-gillespie") {
    const bool g = v.count("gamma") > 0;
    const bool t = v.count("thetas") > 0;
    if (g && !t) errors.emplace_back("gamma requires thetas for verify-gillespie");
    if (t && !g) errors.emplace_back("thetas requires gamma for verify-gillespie");
    if (g && t && *num("gamma") < 0.0 && reals("thetas")->size() < 2) {
      errors.emplace_back("gamma < 0 needs at least two thetas");
    }
    if (num("n-samples") && *num("n-samples") < 100) errors.emplace_back("n-samples must be at least 100");
  }
  if (cmd == "tilt") {
    if (num("n-samples") && *num("n-samples") < 100) errors.emplace_back("n-samples must be at least 100");
  }
  if (cmd == "rate") {
    if (num("resolution") && *num("resolution") < 2) errors.emplace_back("resolution must be at least 2");
  }
}

std::string canonical(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) {
          return io::format_double(x);
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          std::string s;
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) s += ',';
            if constexpr (std::is_same_v<T, std::vector<double>>) {
              s += io::format_double(x[i]);
            } else {
              s += std::to_string(x[i]);
            }
          }
          return s;
        }
      },
      v);
}

// ---------------------------------------------------------------- artifacts

class Artifacts {
 public:
  Artifacts(const std::optional<std::filesystem::path>& dir, std::ostream& stdout_stream)
      : dir_(dir), stdout_(stdout_stream) {}

  // Writes an artifact. Without an output directory only the primary
  // artifact is shown, on stdout.
  void write(const std::string& name, bool primary, const std::function<void(std::ostream&)>& body) {
    if (!dir_) {
      if (primary) body(stdout_);
      return;
    }
    auto os = io::open_output(*dir_ / name);
    body(os);
    if (!os) throw std::runtime_error("failed writing " + name);
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::optional<std::filesystem::path> dir_;
  std::ostream& stdout_;
  std::vector<std::string> names_;
};

void write_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- commands

struct Context {
  const ValidatedSpec& spec;
  Artifacts& artifacts;
  std::ostream& err;
};

int cmd_sample(const Context& ctx) {
  const double theta = ctx.spec.real("theta");
  const auto n = static_cast<std::size_t>(ctx.spec.integer("n-samples"));
  const auto k = static_cast<std::size_t>(ctx.spec.integers("k").front());
  const auto seed = ctx.spec.seed;
  const auto rows = parallel_map<sampling::RankedFrequencies>(n, [&](std::size_t i) {
    return sampling::gem_to_ranked(sampling::draw_gem({theta, sampling::ResidualTarget{}, seed, i}));
  });
  ctx.artifacts.write("samples.csv", true, [&](std::ostream& os) {
    std::vector<std::string> header{"sample_id", "residual"};
    for (std::size_t j = 1; j <= k; ++j) header.push_back("p" + std::to_string(j));
    io::CsvWriter csv(os, header);
    for (std::size_t i = 0; i < n; ++i) {
      csv.field(i).field(rows[i].residual);
      for (std::size_t j = 0; j < k; ++j) csv.field(j < rows[i].p.size() ? rows[i].p[j] : 0.0);
      csv.end_row();
    }
  });
  return kExitOk;
}

int cmd_density(const Context& ctx) {
  const auto grid = exact::DensityGrid::build(ctx.spec.real("theta"), static_cast<int>(ctx.spec.integer("resolution")));
  ctx.artifacts.write("density_grid.csv", true, [&](std::ostream& os) { exact::write_grid_csv(os, grid); });
  ctx.artifacts.write("density.json", false, [&](std::ostream& os) {
    write_json(os, json{{"theta", grid.theta()},
                        {"resolution", grid.resolution()},
                        {"bands", grid.band_count()},
                        {"bottom", grid.bottom()},
                        {"resolved_mass", grid.resolved_mass()},
                        {"unresolved_mass", grid.unresolved_mass()}});
  });
  return kExitOk;
}

int cmd_moments(const Context& ctx) {
  const double theta = ctx.spec.real("theta");
  const int kmax = static_cast<int>(ctx.spec.integers("k").front());
  const int m = static_cast<int>(ctx.spec.integer("m"));
  std::vector<exact::MomentQuery> queries;
  for (int k = 1; k <= kmax; ++k) {
    for (int n = 1; n <= 2; ++n) queries.push_back({k, n, theta});
  }
  const auto results = parallel_map<exact::MomentResult>(
      queries.size(), [&](std::size_t i) { return exact::moment_pk_detailed(queries[i]); });
  ctx.artifacts.write("moments.csv", true, [&](std::ostream& os) {
    io::CsvWriter csv(os, {"quantity", "rank", "order", "value", "rel_error"});
    for (std::size_t i = 0; i < queries.size(); ++i) {
      csv.field(std::string_view("moment_pk")).field(queries[i].k).field(queries[i].n);
      csv.field(results[i].value).field(results[i].rel_error);
      csv.end_row();
    }
    csv.field(std::string_view("homozygosity")).field(0).field(m).field(exact::homozygosity_moment(m, theta)).field(0.0);
    csv.end_row();
  });
  return kExitOk;
}

int cmd_rate(const Context& ctx) {
  const auto xs = ctx.spec.has("x") ? ctx.spec.reals("x")
                                    : rates::rate_table_grid(static_cast<int>(ctx.spec.integer("resolution")));
  ctx.artifacts.write("rate.csv", true, [&](std::ostream& os) { rates::write_rate_table_csv(os, xs); });
  return kExitOk;
}

int cmd_c0(const Context& ctx) {
  const auto r = rates::solve_c0();
  ctx.artifacts.write("c0.json", true, [&](std::ostream& os) {
    write_json(os, json{{"c0", r.c0}, {"residual", r.residual}, {"bracket", {2.0, 10.0}}, {"f_lo", r.f_lo},
                        {"f_hi", r.f_hi}});
  });
  return kExitOk;
}

int finish_report(const Context& ctx, const asymptotics::ConvergenceReport& rep) {
  ctx.artifacts.write("report.csv", true, [&](std::ostream& os) { asymptotics::write_report_csv(os, rep); });
  ctx.artifacts.write("verdict.json", false, [&](std::ostream& os) { asymptotics::write_report_json(os, rep); });
  for (const auto& c : rep.checks) {
    ctx.err << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << io::format_double(c.value)
            << " threshold=" << io::format_double(c.threshold) << '\n';
  }
  return rep.pass() ? kExitOk : kExitVerdict;
}

asymptotics::ThetaSweep sweep_of(const ValidatedSpec& spec, std::size_t samples) {
  asymptotics::ThetaSweep s;
  s.thetas = spec.reals("thetas");
  s.samples_per_theta = samples;
  s.seed = spec.seed;
  return s;
}

int cmd_verify_ldp(const Context& ctx) {
  const auto sweep = sweep_of(ctx.spec, 1);
  const int k = static_cast<int>(ctx.spec.integers("k").front());
  const double x = ctx.spec.reals("x").front();
  const int res = static_cast<int>(ctx.spec.integer("resolution"));
  const auto rep = k == 1 ? asymptotics::verify_ldp_p1(sweep, x, res) : asymptotics::verify_ldp_pk(sweep, k, x, {}, res);
  return finish_report(ctx, rep);
}

int cmd_verify_gumbel(const Context& ctx) {
  const auto sweep = sweep_of(ctx.spec, static_cast<std::size_t>(ctx.spec.integer("n-samples")));
  std::vector<int> ranks;
  for (long long k : ctx.spec.integers("k")) ranks.push_back(static_cast<int>(k));
  return finish_report(ctx, asymptotics::verify_gumbel(sweep, ranks, {ctx.spec.real("ks-threshold")}));
}

int cmd_verify_gaussian(const Context& ctx) {
  const auto n = static_cast<std::size_t>(ctx.spec.integer("n-samples"));
  const auto sweep = sweep_of(ctx.spec, n);
  const int m = static_cast<int>(ctx.spec.integer("m"));
  const auto rep = asymptotics::verify_gaussian_hm(sweep, m, {ctx.spec.real("tol"), ctx.spec.real("ks-threshold")});
  int code = finish_report(ctx, rep);
  if (ctx.spec.has("c")) {
    const auto sb = asymptotics::verify_speed_bound(sweep.thetas.back(), m, ctx.spec.real("c"), n, ctx.spec.seed);
    ctx.artifacts.write("speed_bound.json", false, [&](std::ostream& os) { asymptotics::write_speed_bound_json(os, sb); });
    ctx.err << (sb.pass ? "PASS " : "FAIL ") << "speed_bound lhs=" << io::format_double(sb.lhs)
            << " rhs=" << io::format_double(sb.rhs) << '\n';
    if (!sb.pass) code = kExitVerdict;
  }
  return code;
}

int cmd_verify_gillespie(const Context& ctx) {
  selection::GillespieConfig cfg;
  cfg.c = ctx.spec.real("c");
  cfg.n_samples = static_cast<std::size_t>(ctx.spec.integer("n-samples"));
  cfg.seed = ctx.spec.seed;
  cfg.ks_threshold = ctx.spec.real("ks-threshold");
  if (ctx.spec.has("gamma")) {
    cfg.cases = {{ctx.spec.real("gamma"), ctx.spec.reals("thetas")}};
  } else {
    cfg.cases = selection::GillespieConfig::default_cases();
  }
  const auto rep = selection::verify_gillespie(cfg);
  ctx.artifacts.write("gillespie.csv", true, [&](std::ostream& os) { selection::write_gillespie_csv(os, rep); });
  ctx.artifacts.write("verdict.json", false, [&](std::ostream& os) { selection::write_gillespie_json(os, rep); });
  for (const auto& c : rep.checks) {
    ctx.err << (c.pass ? "PASS " : "FAIL ") << c.name << " gamma=" << io::format_double(c.gamma)
            << " value=" << io::format_double(c.value) << '\n';
  }
  return rep.pass() ? kExitOk : kExitVerdict;
}

rates::HFunctional h_of(const ValidatedSpec& spec) {
  const int m = static_cast<int>(spec.integer("m"));
  return spec.text("h") == "plus_phi" ? rates::HFunctional::plus_phi(m) : rates::HFunctional::minus_phi(m);
}

int cmd_tilt(const Context& ctx) {
  selection::TiltConfig cfg;
  cfg.theta = ctx.spec.real("theta");
  cfg.h = h_of(ctx.spec);
  cfg.alpha = {ctx.spec.real("c"), ctx.spec.real("gamma")};
  cfg.n_samples = static_cast<std::size_t>(ctx.spec.integer("n-samples"));
  cfg.seed = ctx.spec.seed;
  const auto ens = selection::sample_tilted_ensemble(cfg);
  const double sign = cfg.h.kind == rates::HFunctional::Kind::minus_phi ? -1.0 : 1.0;
  std::vector<double> phi(ens.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = sign * ens.h_values[i];
  const auto tilted = selection::tilted_expectation(ens, phi);
  ctx.artifacts.write("ensemble.csv", true, [&](std::ostream& os) { selection::write_ensemble_csv(os, ens); });
  ctx.artifacts.write("tilt.json", false, [&](std::ostream& os) {
    write_json(os, json{{"theta", cfg.theta},
                        {"h", cfg.h.name},
                        {"alpha", cfg.alpha(cfg.theta)},
                        {"ess", ens.ess},
                        {"degenerate", ens.degenerate},
                        {"tilted_phi_mean", tilted.value},
                        {"tilted_phi_se", tilted.se},
                        {"unreliable", tilted.unreliable},
                        {"neutral_phi_sample_mean", numerics::mean(phi)},
                        {"neutral_phi_exact", exact::homozygosity_moment(cfg.h.m, cfg.theta)}});
  });
  if (ens.degenerate) ctx.err << "warning: tilted ensemble is degenerate (ESS = 1)\n";
  if (tilted.unreliable) ctx.err << "warning: ESS below 1% of the sample count\n";
  return kExitOk;
}

int cmd_phase(const Context& ctx) {
  const auto regime = selection::regime_from_alpha(ctx.spec.real("c"), ctx.spec.real("gamma"), h_of(ctx.spec));
  const auto res = selection::phase_classify(regime);
  json j{{"c", ctx.spec.real("c")},
         {"gamma", ctx.spec.real("gamma")},
         {"h", regime.h.name},
         {"label", selection::to_string(res.label)},
         {"branch", selection::to_string(res.branch)},
         {"constant", res.constant},
         {"c0", rates::solve_c0().c0}};
  if (ctx.spec.has("x")) {
    const auto r = res.rate(ctx.spec.reals("x"));
    j["rate_at_x"] = r.is_finite() ? json(r.value()) : json("inf");
  }
  ctx.artifacts.write("phase.json", true, [&](std::ostream& os) { write_json(os, j); });
  return kExitOk;
}

const std::map<std::string, int (*)(const Context&)>& dispatch() {
  static const std::map<std::string, int (*)(const Context&)> table{
      {"sample", cmd_sample},
      {"density", cmd_density},
      {"moments", cmd_moments},
      {"rate", cmd_rate},
      {"c0", cmd_c0},
      {"verify-ldp", cmd_verify_ldp},
      {"verify-gumbel", cmd_verify_gumbel},
      {"verify-gaussian", cmd_verify_gaussian},
      {"verify-gillespie", cmd_verify_gillespie},
      {"tilt", cmd_tilt},
      {"phase", cmd_phase},
  };
  return table;
}

const std::set<std::string>& manifest_keys() {
  static const std::set<std::string> keys{"tool", "version", "command", "parameters", "seed", "out",
                                          "artifacts", "exit_code", "wall_time_seconds", "threads"};
  return keys;
}

}  // namespace

double ValidatedSpec::real(const std::string& key) const {
  const auto& v = values.at(key);
  if (auto d = std::get_if<double>(&v)) return *d;
  if (auto i = std::get_if<long long>(&v)) return static_cast<double>(*i);
  throw std::logic_error("parameter " + key + " is not numeric");
}

long long ValidatedSpec::integer(const std::string& key) const { return std::get<long long>(values.at(key)); }
const std::string& ValidatedSpec::text(const std::string& key) const { return std::get<std::string>(values.at(key)); }
const std::vector<double>& ValidatedSpec::reals(const std::string& key) const {
  return std::get<std::vector<double>>(values.at(key));
}
const std::vector<long long>& ValidatedSpec::integers(const std::string& key) const {
  return std::get<std::vector<long long>>(values.at(key));
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"sample",          "density",       "moments",         "rate",
                                              "c0",              "verify-ldp",    "verify-gumbel",   "verify-gaussian",
                                              "verify-gillespie", "tilt",         "phase"};
  return names;
}

ExperimentSpec parse_command_line(const std::vector<std::string>& args, std::vector<std::string>& errors) {
  ExperimentSpec spec;
  std::size_t i = 0;
  if (i < args.size() && args[i].rfind("--", 0) != 0) spec.command = args[i++];
  while (i < args.size()) {
    const std::string& tok = args[i++];
    if (tok.rfind("--", 0) != 0 || tok.size() == 2) {
      errors.push_back("unexpected argument '" + tok + "'");
      continue;
    }
    std::string key = tok.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else if (i < args.size()) {
      value = args[i++];
    } else {
      errors.push_back("missing value for --" + key);
      continue;
    }
    if (!spec.params.emplace(key, value).second) errors.push_back("duplicate key --" + key);
  }
  return spec;
}

std::vector<std::string> validate(const ExperimentSpec& spec) {
  std::vector<std::string> errors;
  const auto& commands = command_table();
  const auto it = commands.find(spec.command);
  if (spec.command.empty()) {
    errors.emplace_back("missing command");
    return errors;
  }
  if (it == commands.end()) {
    errors.push_back("unknown command '" + spec.command + "'");
    return errors;
  }
  const auto& info = it->second;
  std::map<std::string, Value> values;
  for (const auto& [key, raw] : spec.params) {
    const bool common = key == "seed" || key == "out";
    if (!common && std::find(info.keys.begin(), info.keys.end(), key) == info.keys.end()) {
      errors.push_back("unknown key --" + key + " for command " + spec.command);
      continue;
    }
    if (auto v = convert(key, raw, errors)) values.emplace(key, std::move(*v));
  }
  for (const auto& key : info.required) {
    if (!spec.params.count(key)) errors.push_back("missing required key --" + key);
  }
  for (const auto& [key, raw] : info.defaults) {
    if (!values.count(key) && !spec.params.count(key)) {
      if (auto v = convert(key, raw, errors)) values.emplace(key, std::move(*v));
    }
  }
  check_command(spec.command, values, errors);
  return errors;
}

ValidatedSpec resolve(const ExperimentSpec& spec) {
  const auto errors = validate(spec);
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw std::invalid_argument(msg);
  }
  ValidatedSpec out;
  out.command = spec.command;
  const auto& info = command_table().at(spec.command);
  std::vector<std::string> ignored;
  for (const auto& [key, raw] : spec.params) {
    if (key == "seed") {
      out.seed = std::stoull(raw);
    } else if (key == "out") {
      out.out = std::filesystem::path(raw);
    } else {
      out.values.emplace(key, *convert(key, raw, ignored));
    }
  }
  for (const auto& [key, raw] : info.defaults) {
    if (!out.values.count(key)) out.values.emplace(key, *convert(key, raw, ignored));
  }
  return out;
}

ExperimentSpec spec_from_manifest(const std::filesystem::path& manifest, const std::optional<std::string>& out_override) {
  std::ifstream is(manifest);
  if (!is) throw std::invalid_argument("cannot read manifest " + manifest.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw std::invalid_argument("manifest is not valid JSON: " + std::string(e.what()));
  }
  std::vector<std::string> errors;
  if (!j.is_object()) throw std::invalid_argument("manifest must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!manifest_keys().count(key)) errors.push_back("unknown manifest key '" + key + "'");
  }
  ExperimentSpec spec;
  if (!j.contains("command") || !j["command"].is_string()) {
    errors.emplace_back("manifest has no command");
  } else {
    spec.command = j["command"].get<std::string>();
  }
  if (j.contains("parameters")) {
    if (!j["parameters"].is_object()) {
      errors.emplace_back("manifest parameters must be an object");
    } else {
      for (const auto& [key, val] : j["parameters"].items()) {
        if (!val.is_string()) {
          errors.push_back("manifest parameter '" + key + "' must be a string");
          continue;
        }
        spec.params[key] = val.get<std::string>();
      }
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) {
      errors.emplace_back("manifest seed must be a non-negative integer");
    } else {
      spec.params["seed"] = std::to_string(j["seed"].get<std::uint64_t>());
    }
  }
  if (out_override) {
    spec.params["out"] = *out_override;
  } else if (j.contains("out") && j["out"].is_string()) {
    spec.params["out"] = j["out"].get<std::string>();
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw std::invalid_argument(msg);
  }
  return spec;
}

int run(const ValidatedSpec& spec, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  Artifacts artifacts(spec.out, out);
  const Context ctx{spec, artifacts, err};
  const int code = dispatch().at(spec.command)(ctx);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (spec.out) {
    json params = json::object();
    for (const auto& [key, v] : spec.values) params[key] = canonical(v);
    json manifest{{"tool", "pdlab"},
                  {"version", PDLAB_VERSION},
                  {"command", spec.command},
                  {"parameters", params},
                  {"seed", spec.seed},
                  {"out", spec.out->string()},
                  {"artifacts", artifacts.names()},
                  {"exit_code", code},
                  {"threads", worker_count()},
                  {"wall_time_seconds", wall}};
    auto os = io::open_output(*spec.out / "manifest.json");
    write_json(os, manifest);
  }
  return code;
}

std::string usage() {
  std::ostringstream os;
  os << "usage: pdlab <command> [--key value ...]\n"
     << "       pdlab --from-manifest <manifest.json> [--out DIR]\n\ncommands:\n";
  for (const auto& name : command_names()) {
    const auto& info = command_table().at(name);
    os << "  " << name << std::string(18 - name.size(), ' ') << info.help << '\n';
    if (!info.keys.empty()) {
      os << "  " << std::string(18, ' ') << "keys:";
      for (const auto& k : info.keys) {
        os << " --" << k;
        if (auto d = info.defaults.find(k); d != info.defaults.end()) os << "=" << d->second;
      }
      os << '\n';
    }
  }
  os << "\ncommon keys: --seed N (default 0), --out DIR (default: primary artifact to stdout)\n"
     << "keys:\n";
  for (const auto& [k, info] : key_table()) os << "  --" << k << std::string(14 - k.size(), ' ') << info.help << '\n';
  os << "\nexit status: 0 success, 1 usage or numeric error, 2 verification failed\n"
     << "PD_LAB_THREADS caps the worker count; results do not depend on it.\n";
  return os.str();
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    (args.empty() ? err : out) << usage();
    return args.empty() ? kExitError : kExitOk;
  }
  if (args[0] == "--version") {
    out << "pdlab " << PDLAB_VERSION << '\n';
    return kExitOk;
  }
  try {
    ExperimentSpec spec;
    if (args[0] == "--from-manifest" || args[0].rfind("--from-manifest=", 0) == 0) {
      std::vector<std::string> rest(args.begin(), args.end());
      std::string path;
      if (rest[0] == "--from-manifest") {
        if (rest.size() < 2) throw std::invalid_argument("missing value for --from-manifest");
        path = rest[1];
        rest.erase(rest.begin(), rest.begin() + 2);
      } else {
        path = rest[0].substr(std::string("--from-manifest=").size());
        rest.erase(rest.begin());
      }
      std::vector<std::string> errors;
      const auto extra = parse_command_line(rest, errors);
      if (!extra.command.empty()) errors.push_back("unexpected argument '" + extra.command + "'");
      for (const auto& [k, v] : extra.params) {
        if (k != "out") errors.push_back("only --out may accompany --from-manifest (got --" + k + ")");
      }
      if (!errors.empty()) {
        for (const auto& e : errors) err << "error: " << e << '\n';
        return kExitError;
      }
      std::optional<std::string> out_override;
      if (extra.params.count("out")) out_override = extra.params.at("out");
      spec = spec_from_manifest(path, out_override);
    } else {
      std::vector<std::string> errors;
      spec = parse_command_line(args, errors);
      for (const auto& e : validate(spec)) errors.push_back(e);
      if (!errors.empty()) {
        for (const auto& e : errors) err << "error: " << e << '\n';
        err << "run 'pdlab --help' for usage\n";
        return kExitError;
      }
    }
    return run(resolve(spec), out, err);
  } catch (const std::invalid_argument& e) {
    std::istringstream lines(e.what());
    for (std::string line; std::getline(lines, line);) err << "error: " << line << '\n';
    return kExitError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace pdlab::cli
