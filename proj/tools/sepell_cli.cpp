// Copyright 2026 The sepell Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: gen, certify, scan, volume.
//
// Exit codes: 0 success / certified, 1 inconclusive, 2 error,
// 3 scan interval does not bracket a verdict change.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sepell/sepell.hpp"

namespace {

using namespace sepell;

constexpr int kExitInconclusive = 1;
constexpr int kExitError = 2;
constexpr int kExitNoBracket = 3;

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw Error(std::string("cannot parse ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::array<double, 4> parse_four(const std::string& text, const char* what) {
  const auto v = parse_list(text, what);
  if (v.size() != 4) throw Error(std::string(what) + " needs exactly 4 comma-separated values");
  return {v[0], v[1], v[2], v[3]};
}

void emit_state(const HermitianMatrix& h, const std::string& out, const nlohmann::json& manifest) {
  if (out.empty() || out == "-") {
    std::cout << write_matrix(h);
    return;
  }
  save_matrix(out, h);
  nlohmann::json m = manifest;
  m["output"] = out;
  m["dims"] = h.dims();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(matrix_digest(h)));
  m["digest"] = hex;
  std::ofstream(out + ".manifest.json") << m.dump(2) << "\n";
}

// ------------------------------------------------------------------ gen

struct XStateArgs {
  double p = 0.0;
  std::string preset;
  std::string a, b, c;
};

void add_x_state_flags(CLI::App* cmd, XStateArgs& x) {
  cmd->add_option("--preset", x.preset, "parameter preset")->check(CLI::IsMember({"paper"}));
  cmd->add_option("--a", x.a, "a_1..a_4, comma separated");
  cmd->add_option("--b", x.b, "b_1..b_4, comma separated");
  cmd->add_option("--c", x.c, "c_1..c_4 (real), comma separated");
}

XStateParams x_params(const XStateArgs& x) {
  XStateParams p = XStateParams::reference();
  const bool custom = !x.a.empty() || !x.b.empty() || !x.c.empty();
  if (custom && !x.preset.empty()) throw Error("--preset cannot be combined with --a/--b/--c");
  if (custom) {
    if (x.a.empty() || x.b.empty() || x.c.empty()) throw Error("--a, --b and --c must be given together");
    p.a = parse_four(x.a, "--a");
    p.b = parse_four(x.b, "--b");
    const auto c = parse_four(x.c, "--c");
    for (int j = 0; j < 4; ++j) p.c[j] = c[j];
  }
  p.validate();
  return p;
}

struct IsingArgs {
  int length = 12;
  double field = 1.0;
  double temperature = 0.0;
  int sites = 3;
  std::string boundary = "periodic";

  IsingSpec spec() const {
    IsingSpec s;
    s.length = length;
    s.field = field;
    s.temperature = temperature;
    s.boundary = boundary == "open" ? Boundary::Open : Boundary::Periodic;
    return s;
  }
};

void add_ising_flags(CLI::App* cmd, IsingArgs& s, bool with_temperature) {
  cmd->add_option("--L", s.length, "chain length")->check(CLI::Range(2, kIsingMaxLength));
  cmd->add_option("--h", s.field, "transverse field");
  if (with_temperature) cmd->add_option("--T", s.temperature, "temperature (0 = ground state)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--sites", s.sites, "number of adjacent central sites")->check(CLI::PositiveNumber);
  cmd->add_option("--boundary", s.boundary, "chain boundary")->check(CLI::IsMember({"periodic", "open"}));
}

// -------------------------------------------------------------- certify

struct OptimizerArgs {
  OptimizerConfig cfg;
  int jobs = 1;
};

void add_optimizer_flags(CLI::App* cmd, OptimizerArgs& o) {
  cmd->add_option("--terms", o.cfg.terms, "product terms u in the reference")->check(CLI::PositiveNumber);
  cmd->add_option("--restarts", o.cfg.restarts, "optimizer restarts")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", o.cfg.max_iters, "optimizer iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.cfg.seed, "random seed");
  cmd->add_option("--jobs", o.jobs, "worker threads")->envname("SEP_ELLIPSOID_JOBS")->check(CLI::PositiveNumber);
}

void print_table(const CertificationReport& r) {
  std::printf("%-18s %-12s %-20s %14s\n", "stage", "criterion", "verdict", "margin");
  for (const auto& s : r.stages)
    std::printf("%-18s %-12s %-20s %14.6e\n", s.stage.c_str(), s.outcome.criterion.c_str(), to_string(s.outcome.verdict),
                s.outcome.margin);
  for (const auto& [label, n] : r.negativities) std::printf("negativity %-7s %.6e\n", label.c_str(), n);
  if (r.distance) std::printf("distance %.6e\n", *r.distance);
  if (r.guard_tripped) std::printf("soundness guard: certificate withdrawn (NPT)\n");
  std::printf("verdict %s\n", to_string(r.verdict));
}

CertificateOutcome single_criterion(const std::string& name, const HermitianMatrix& rho, const Dims& dims) {
  const ProductState nat = natural_product_state(rho, dims);
  if (name == "trace") return trace_criterion(rho, nat);
  if (name == "ellipsoid") return ellipsoid_criterion(rho, nat);
  return ball_criterion(rho, nat);
}

int run_certify(const std::string& file, int k, const std::string& criterion, OptimizerArgs o, const std::string& format) {
  const HermitianMatrix rho = load_matrix(file);
  const Dims dims = rho.effective_dims();
  const int m = static_cast<int>(dims.size());
  if (k == 0) k = m;
  o.cfg.jobs = o.jobs;
  o.cfg.validate();  // environment values bypass CLI11 validators
  if (criterion != "auto") {
    if (k != m) throw Error("--criterion " + criterion + " tests full separability; use --k " + std::to_string(m));
    detail::check_state(rho, dims);
    CertificationReport r;
    r.digest = matrix_digest(rho);
    r.dims = dims;
    r.k = k;
    for (const auto& bp : all_partitions(m, 2)) r.negativities.emplace_back(bp.label(), negativity(rho, dims, bp));
    r.stages.push_back({"natural-product", single_criterion(criterion, rho, dims), {}, {}});
    r.verdict = r.stages.back().outcome.verdict;
    for (const auto& [label, n] : r.negativities)
      if (r.certified() && n > kNegativityGuardTol) {
        r.verdict = Verdict::Inconclusive;
        r.guard_tripped = true;
      }
    if (format == "table")
      print_table(r);
    else
      std::cout << to_json(r).dump(2) << "\n";
    return r.certified() ? 0 : kExitInconclusive;
  }
  const CertificationReport r = certify(rho, dims, k, o.cfg);
  if (format == "table")
    print_table(r);
  else
    std::cout << to_json(r).dump(2) << "\n";
  return r.certified() ? 0 : kExitInconclusive;
}

// ----------------------------------------------------------------- scan

int report_scan(const ScanResult& res) {
  std::cout << scan_csv(res.probes);
  std::printf("# threshold=%.10g certified_%s monotone=%s\n", res.threshold, res.certified_above ? "above" : "below",
              res.monotone ? "true" : "false");
  if (!res.monotone) std::fprintf(stderr, "warning: recorded margins are not monotone in the parameter\n");
  return 0;
}

int scan_guarded(const StateFamily& family, double lo, double hi, const CriterionSelector& sel, double tol) {
  try {
    return report_scan(threshold_scan(family, lo, hi, sel, tol));
  } catch (const NoBracketError& e) {
    std::cout << scan_csv(e.probes());
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNoBracket;
  }
}

// --------------------------------------------------------------- volume

std::vector<double> eigenvalues_of(const HermitianMatrix& h) {
  const EigenSystem es = eigh(h);
  return {es.eigenvalues.data(), es.eigenvalues.data() + es.eigenvalues.size()};
}

std::vector<double> ising_single_site_cube(double field) {
  IsingSpec s;
  s.length = 14;
  s.field = field;
  const HermitianMatrix r1 = ising_rdm(s, central_sites(s.length, 1));
  const auto e = eigenvalues_of(r1);
  return product_spectrum({e, e, e});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separability certificates for multipartite density matrices"};
  app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a model state");
  gen->require_subcommand(1);
  XStateArgs xs;
  std::string gen_out;
  auto* gen_x = gen->add_subcommand("x-state", "dephased three-qubit X state");
  gen_x->add_option("--p", xs.p, "dephasing strength in [0, 1]");
  add_x_state_flags(gen_x, xs);
  gen_x->add_option("-o,--output", gen_out, "output file (default: stdout)");
  IsingArgs is;
  auto* gen_i = gen->add_subcommand("ising-rdm", "reduced state of a transverse-field Ising chain");
  add_ising_flags(gen_i, is, true);
  gen_i->add_option("-o,--output", gen_out, "output file (default: stdout)");

  // certify
  auto* cert = app.add_subcommand("certify", "certify separability of a state file");
  std::string cert_file, cert_criterion = "auto", cert_format = "json";
  int cert_k = 0;
  OptimizerArgs oa;
  cert->add_option("file", cert_file, "matrix file")->required();
  cert->add_option("--k", cert_k, "certify k-separability (default: number of subsystems)")->check(CLI::Range(2, 64));
  cert->add_option("--criterion", cert_criterion, "criterion")
      ->check(CLI::IsMember({"auto", "trace", "ellipsoid", "ball"}));
  cert->add_option("--format", cert_format, "report format")->check(CLI::IsMember({"json", "table"}));
  add_optimizer_flags(cert, oa);

  // scan
  auto* scan = app.add_subcommand("scan", "bisect a certification threshold along a state family");
  scan->require_subcommand(1);
  std::string scan_criterion = "trace";
  double scan_from = 0.0, scan_to = 1.0, scan_tol = 0.005;
  auto* scan_x = scan->add_subcommand("x-dephase", "X state versus dephasing strength p");
  XStateArgs sx;
  add_x_state_flags(scan_x, sx);
  for (auto* c : {scan_x}) {
    c->add_option("--criterion", scan_criterion, "criterion")->check(CLI::IsMember({"trace", "ellipsoid", "ball"}));
  }
  IsingArgs si;
  int scan_k = 3;
  OptimizerArgs so;
  auto* scan_i = scan->add_subcommand("ising-thermal", "Ising reduced state versus temperature (certify pipeline)");
  add_ising_flags(scan_i, si, false);
  scan_i->add_option("--k", scan_k, "k-separability level")->check(CLI::Range(2, 64));
  add_optimizer_flags(scan_i, so);
  for (auto* c : {scan_x, scan_i}) {
    c->add_option("--from", scan_from, "interval start");
    c->add_option("--to", scan_to, "interval end");
    c->add_option("--tol", scan_tol, "bisection tolerance")->check(CLI::PositiveNumber);
  }

  // volume
  auto* vol = app.add_subcommand("volume", "ellipsoid-to-ball volume ratio around a product state");
  std::string vol_file, vol_spectrum, vol_preset;
  vol->add_option("file", vol_file, "matrix file; uses its natural product reference");
  vol->add_option("--spectrum", vol_spectrum, "product-state eigenvalues, comma separated");
  vol->add_option("--preset", vol_preset, "built-in reference")
      ->check(CLI::IsMember({"ising-h1", "ising-h3", "x-state"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    // CLI11 silently ignores environment values that fail validation.
    if (const char* env = std::getenv("SEP_ELLIPSOID_JOBS")) {
      int n = 0;
      std::istringstream in(env);
      if (!(in >> n) || !in.eof() || n < 1) throw Error("SEP_ELLIPSOID_JOBS must be a positive integer");
    }
    if (gen_x->parsed()) {
      const XStateParams base = x_params(xs);
      if (!(xs.p >= 0 && xs.p <= 1)) throw Error("--p must lie in [0, 1]");
      const XStateParams p = dephase_x(base, xs.p);
      nlohmann::json manifest = to_json(base);
      manifest["p"] = xs.p;
      manifest["preset"] = xs.a.empty() ? "paper" : "custom";
      emit_state(x_state(p), gen_out, manifest);
      return 0;
    }
    if (gen_i->parsed()) {
      const IsingSpec s = is.spec();
      if (is.sites > s.length) throw Error("--sites exceeds chain length");
      const auto sites = central_sites(s.length, is.sites);
      nlohmann::json manifest = to_json(s);
      manifest["sites"] = sites;
      emit_state(ising_rdm(s, sites), gen_out, manifest);
      return 0;
    }
    if (cert->parsed()) return run_certify(cert_file, cert_k, cert_criterion, oa, cert_format);
    if (scan_x->parsed()) {
      const XStateParams base = x_params(sx);
      const StateFamily family = [base](double p) { return x_state(dephase_x(base, p)); };
      const Dims dims{2, 2, 2};
      const CriterionSelector sel = [&](const HermitianMatrix& rho) {
        return single_criterion(scan_criterion, rho, dims);
      };
      return scan_guarded(family, scan_from, scan_to, sel, scan_tol);
    }
    if (scan_i->parsed()) {
      const IsingSpec s = si.spec();
      if (si.sites > s.length) throw Error("--sites exceeds chain length");
      const auto sites = central_sites(s.length, si.sites);
      if (scan_k > si.sites) throw Error("--k exceeds the number of sites");
      auto ensemble = std::make_shared<IsingEnsemble>(s);
      const StateFamily family = [ensemble, sites](double t) { return ensemble->rdm(sites, t); };
      so.cfg.jobs = so.jobs;
      so.cfg.validate();
      const Dims dims(si.sites, 2);
      const CriterionSelector sel = [&](const HermitianMatrix& rho) {
        const CertificationReport r = certify(rho, dims, scan_k, so.cfg);
        CertificateOutcome o = r.stages.back().outcome;
        for (const auto& st : r.stages)
          if (st.outcome.certified()) o = st.outcome;
        o.verdict = r.verdict;
        return o;
      };
      return scan_guarded(family, scan_from, scan_to, sel, scan_tol);
    }
    if (vol->parsed()) {
      const int sources = !vol_file.empty() + !vol_spectrum.empty() + !vol_preset.empty();
      if (sources != 1) throw Error("volume: give exactly one of FILE, --spectrum, --preset");
      std::vector<double> spectrum;
      if (!vol_spectrum.empty()) {
        spectrum = parse_list(vol_spectrum, "--spectrum");
      } else if (vol_preset == "ising-h1") {
        const double pi = std::acos(-1.0);
        const std::vector<double> e{0.5 - 1.0 / pi, 0.5 + 1.0 / pi};
        spectrum = product_spectrum({e, e, e});
      } else if (vol_preset == "ising-h3") {
        spectrum = ising_single_site_cube(3.0);
      } else {
        const HermitianMatrix rho =
            vol_preset == "x-state" ? x_state(XStateParams::reference()) : load_matrix(vol_file);
        const ProductState nat = natural_product_state(rho, rho.effective_dims());
        std::vector<std::vector<double>> fs;
        for (const auto& f : nat.factors()) fs.push_back(eigenvalues_of(f));
        spectrum = product_spectrum(fs);
      }
      const VolumeReport r = log_volume_ratio(spectrum);
      nlohmann::json j = to_json(r);
      j["lambda_max_over_min"] = r.eigenvalues.front() / r.eigenvalues.back();
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
