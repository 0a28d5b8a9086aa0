// fdikit command line front end.  Everything goes through the C API of the
// shared library; models and results are JSON files.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fdikit/fdikit.h"

using nlohmann::json;

namespace {

int exit_code(fdk_status st) {
  switch (st) {
    case FDK_OK:
      return 0;
    case FDK_ERR_USAGE:
      return 1;
    case FDK_ERR_UNSOLVABLE:
      return 2;
    default:
      return 3;
  }
}

int fail_status(fdk_status st) {
  std::cerr << "fdikit: " << fdk_last_error() << "\n";
  return exit_code(st);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) {
    std::cerr << "fdikit: cannot write '" << path << "'\n";
    std::exit(1);
  }
}

struct ModelHandle {
  fdk_model* m = nullptr;
  ~ModelHandle() { fdk_model_free(m); }
  fdk_model** slot() { return &m; }
};

struct StringHandle {
  char* s = nullptr;
  ~StringHandle() { fdk_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

int load_model(const std::string& path, ModelHandle& h) {
  std::string text = read_file(path);
  fdk_status st = fdk_model_from_json(text.c_str(), h.slot());
  if (st != FDK_OK) return fail_status(st);
  return 0;
}

void save_model(const fdk_model* m, const std::string& path) {
  StringHandle text;
  fdk_status st = fdk_model_to_json(m, &text.s);
  if (st != FDK_OK) std::exit(fail_status(st));
  write_file(path, text.str());
}

// Common option plumbing: every flag lands in a JSON object passed to the
// C API verbatim.
struct OptBuilder {
  json j = json::object();
  std::vector<std::function<void()>> finishers;

  void add_double(CLI::App* cmd, const std::string& flag,
                  const std::string& key, const std::string& help) {
    auto val = std::make_shared<double>();
    auto* opt = cmd->add_option(flag, *val, help);
    finishers.push_back([this, key, val, opt] {
      if (opt->count()) j[key] = *val;
    });
  }
  void add_int(CLI::App* cmd, const std::string& flag, const std::string& key,
               const std::string& help) {
    auto val = std::make_shared<int>();
    auto* opt = cmd->add_option(flag, *val, help);
    finishers.push_back([this, key, val, opt] {
      if (opt->count()) j[key] = *val;
    });
  }
  void add_flag(CLI::App* cmd, const std::string& flag, const std::string& key,
                const std::string& help, bool invert = false) {
    auto val = std::make_shared<bool>(false);
    auto* opt = cmd->add_flag(flag, *val, help);
    finishers.push_back([this, key, val, opt, invert] {
      if (opt->count()) j[key] = invert ? !*val : *val;
    });
  }
  void add_doubles(CLI::App* cmd, const std::string& flag,
                   const std::string& key, const std::string& help) {
    auto val = std::make_shared<std::vector<double>>();
    auto* opt = cmd->add_option(flag, *val, help);
    finishers.push_back([this, key, val, opt] {
      if (opt->count()) j[key] = *val;
    });
  }
  void add_ints(CLI::App* cmd, const std::string& flag, const std::string& key,
                const std::string& help) {
    auto val = std::make_shared<std::vector<int>>();
    auto* opt = cmd->add_option(flag, *val, help);
    finishers.push_back([this, key, val, opt] {
      if (opt->count()) j[key] = *val;
    });
  }
  void add_strings(CLI::App* cmd, const std::string& flag,
                   const std::string& key, const std::string& help) {
    auto val = std::make_shared<std::vector<std::string>>();
    auto* opt = cmd->add_option(flag, *val, help);
    finishers.push_back([this, key, val, opt] {
      if (opt->count()) j[key] = *val;
    });
  }
  void add_string(CLI::App* cmd, const std::string& flag,
                  const std::string& key, const std::string& help) {
    auto val = std::make_shared<std::string>();
    auto* opt = cmd->add_option(flag, *val, help);
    finishers.push_back([this, key, val, opt] {
      if (opt->count()) j[key] = *val;
    });
  }
  // matrix-valued option read from a JSON file or inline text
  void add_matrix(CLI::App* cmd, const std::string& flag,
                  const std::string& key, const std::string& help) {
    auto val = std::make_shared<std::string>();
    auto* opt = cmd->add_option(flag, *val, help);
    finishers.push_back([this, key, val, opt] {
      if (!opt->count()) return;
      std::string text = *val;
      if (!text.empty() && text[0] != '[') text = read_file(text);
      j[key] = json::parse(text);
    });
  }

  std::string options() {
    for (auto& f : finishers) f();
    if (!j.contains("seed")) {
      if (const char* env = std::getenv("FDIKIT_SEED"))
        j["seed"] = static_cast<uint64_t>(std::strtoull(env, nullptr, 10));
    }
    return j.dump();
  }
  std::string options_no_seed() {
    for (auto& f : finishers) f();
    j.erase("seed");
    return j.dump();
  }
};

void add_synthesis_flags(CLI::App* cmd, OptBuilder& b) {
  b.add_double(cmd, "--tol", "tol", "rank tolerance");
  b.add_double(cmd, "--fd-tol", "fd-tol", "fault detectability threshold");
  b.add_double(cmd, "--fd-gain-tol", "fd-gain-tol",
               "strong detectability gain threshold");
  b.add_int(cmd, "--rdim", "rdim", "residual output count");
  b.add_doubles(cmd, "--fd-freq", "fd-freq", "strong detectability grid");
  b.add_double(cmd, "--smarg", "smarg", "stability margin");
  b.add_double(cmd, "--sdeg", "sdeg", "stability degree for assigned poles");
  b.add_doubles(cmd, "--poles", "poles", "pole placement list");
  b.add_flag(cmd, "--full-order", "minimal",
             "disable the least-order synthesis", /*invert=*/true);
  b.add_flag(cmd, "--observer-basis", "nullspace",
             "use the full-order observer basis", /*invert=*/true);
  b.add_matrix(cmd, "--hdesign", "hdesign", "design matrix (JSON or file)");
  b.add_double(cmd, "--tcond", "tcond", "condition-number bound");
  b.add_int(cmd, "--seed", "seed", "deterministic design seed");
}

void print_report(const std::string& rep, const std::string& outfile,
                  const std::string& summary) {
  if (!summary.empty()) std::cout << summary << "\n";
  json wrapped;
  wrapped["report"] = json::parse(rep);
  std::string text = wrapped.dump(2) + "\n";
  if (outfile.empty())
    std::cout << text;
  else
    write_file(outfile, text);
}

std::string summarize_struct(const json& rep) {
  std::ostringstream ss;
  const json& s = rep.at("s");
  ss << s.size() << " specification row(s):";
  for (const auto& row : s) {
    ss << "\n  ";
    for (const auto& v : row) ss << (v.get<int>() ? '1' : '0');
  }
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fdikit - fault detection/isolation and model detection "
               "filter synthesis for LTI systems"};
  app.require_subcommand(1);

  std::string model_path, second_path, sfdi_path, out_path;
  std::string out_q, out_r, out_m;

  // ---- genspec ----
  auto* genspec = app.add_subcommand(
      "genspec", "all achievable fault detection specifications");
  OptBuilder gb;
  genspec->add_option("model", model_path, "plant model JSON")->required();
  genspec->add_option("-o,--output", out_path, "report file");
  gb.add_double(genspec, "--tol", "tol", "rank tolerance");
  gb.add_double(genspec, "--fd-tol", "fd-tol", "detectability threshold");
  gb.add_double(genspec, "--fd-gain-tol", "fd-gain-tol", "gain threshold");
  gb.add_doubles(genspec, "--fd-freq", "fd-freq", "strong test grid");
  gb.add_double(genspec, "--sdeg", "sdeg", "stabilization degree");
  genspec->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_genspec(m.m, gb.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    json r = json::parse(rep.str());
    print_report(rep.str(), out_path, summarize_struct(r));
  });

  // ---- chkspec ----
  auto* chkspec = app.add_subcommand(
      "chkspec", "feasibility and least orders of FDI specifications");
  OptBuilder cb;
  chkspec->add_option("model", model_path, "plant model JSON")->required();
  chkspec->add_option("--sfdi", sfdi_path, "specification rows (JSON file)")
      ->required();
  chkspec->add_option("-o,--output", out_path, "report file");
  cb.add_double(chkspec, "--tol", "tol", "rank tolerance");
  cb.add_double(chkspec, "--fd-tol", "fd-tol", "detectability threshold");
  cb.add_double(chkspec, "--fd-gain-tol", "fd-gain-tol", "gain threshold");
  cb.add_doubles(chkspec, "--fd-freq", "fd-freq", "strong test grid");
  cb.add_int(chkspec, "--seed", "seed", "design seed");
  chkspec->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    std::string sfdi = read_file(sfdi_path);
    StringHandle rep;
    fdk_status st =
        fdk_chkspec(m.m, sfdi.c_str(), cb.options().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    json r = json::parse(rep.str());
    int feasible = 0;
    for (const auto& v : r.at("rdims"))
      if (v.get<int>() > 0) ++feasible;
    std::ostringstream ss;
    ss << feasible << " of " << r.at("rdims").size()
       << " specification(s) feasible";
    print_report(rep.str(), out_path, ss.str());
  });

  // ---- tspec / sspec ----
  auto* tspec = app.add_subcommand("tspec", "weak/strong structure matrix");
  OptBuilder tb;
  tspec->add_option("model", model_path, "internal form (or bank) JSON")
      ->required();
  tspec->add_option("-o,--output", out_path, "report file");
  tb.add_double(tspec, "--tol", "tol", "rank tolerance");
  tb.add_double(tspec, "--fd-tol", "fd-tol", "zero threshold");
  tb.add_doubles(tspec, "--fd-freq", "fd-freq", "strong test grid");
  tb.add_flag(tspec, "--block", "block", "column-wise evaluation");
  tspec->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_tspec(m.m, tb.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    print_report(rep.str(), out_path, summarize_struct(json::parse(rep.str())));
  });

  auto* sspec = app.add_subcommand("sspec", "strong structure matrix + gains");
  OptBuilder sb;
  sspec->add_option("model", model_path, "internal form (or bank) JSON")
      ->required();
  sspec->add_option("-o,--output", out_path, "report file");
  sb.add_double(sspec, "--fd-gain-tol", "fd-gain-tol", "gain threshold");
  sb.add_doubles(sspec, "--fd-freq", "fd-freq", "test grid (default {0})");
  sb.add_flag(sspec, "--block", "block", "column-wise evaluation");
  sspec->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_sspec(m.m, sb.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    print_report(rep.str(), out_path, summarize_struct(json::parse(rep.str())));
  });

  // ---- efdsyn / afdsyn ----
  auto add_filter_outputs = [&](CLI::App* cmd) {
    cmd->add_option("--output-q", out_q, "filter (implementation form) file");
    cmd->add_option("--output-r", out_r, "internal form file");
    cmd->add_option("-o,--output", out_path, "report file");
  };

  auto* efd = app.add_subcommand("efdsyn", "exact fault detection filter");
  OptBuilder eb;
  efd->add_option("model", model_path, "plant model JSON")->required();
  add_filter_outputs(efd);
  add_synthesis_flags(efd, eb);
  efd->callback([&] {
    ModelHandle m, q, r;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st =
        fdk_efdsyn(m.m, eb.options().c_str(), q.slot(), r.slot(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    if (!out_q.empty()) save_model(q.m, out_q);
    if (!out_r.empty()) save_model(r.m, out_r);
    print_report(rep.str(), out_path, "exact fault detection filter computed");
  });

  auto* afd = app.add_subcommand(
      "afdsyn", "approximate fault detection filter (noise attenuation)");
  OptBuilder ab;
  afd->add_option("model", model_path, "plant model JSON")->required();
  add_filter_outputs(afd);
  add_synthesis_flags(afd, ab);
  ab.add_double(afd, "--gamma", "gamma", "noise channel norm bound");
  ab.add_flag(afd, "--exact", "exact", "skip the optimization");
  ab.add_matrix(afd, "--hdesign2", "hdesign2", "second design matrix");
  ab.add_int(afd, "--nonstd", "nonstd", "nonstandard-problem handling (1)");
  ab.add_double(afd, "--freq", "freq", "admissibility frequency");
  afd->callback([&] {
    ModelHandle m, q, r;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st =
        fdk_afdsyn(m.m, ab.options().c_str(), q.slot(), r.slot(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    if (!out_q.empty()) save_model(q.m, out_q);
    if (!out_r.empty()) save_model(r.m, out_r);
    json rj = json::parse(rep.str());
    std::ostringstream ss;
    ss << "approximate fault detection filter computed, gap = "
       << rj.value("gap", json()).dump();
    print_report(rep.str(), out_path, ss.str());
  });

  // ---- efdisyn / afdisyn ----
  auto* efdi = app.add_subcommand("efdisyn", "exact FDI filter bank");
  OptBuilder eib;
  efdi->add_option("model", model_path, "plant model JSON")->required();
  efdi->add_option("--sfdi", sfdi_path, "target structure matrix (file)");
  add_filter_outputs(efdi);
  add_synthesis_flags(efdi, eib);
  eib.add_ints(efdi, "--fd-select", "fd-select", "rows to design");
  efdi->callback([&] {
    ModelHandle m, q, r;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    if (!sfdi_path.empty())
      eib.j["sfdi"] = json::parse(read_file(sfdi_path));
    StringHandle rep;
    fdk_status st =
        fdk_efdisyn(m.m, eib.options().c_str(), q.slot(), r.slot(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    if (!out_q.empty()) save_model(q.m, out_q);
    if (!out_r.empty()) save_model(r.m, out_r);
    std::ostringstream ss;
    ss << "bank of " << fdk_model_count(q.m) << " exact FDI filter(s) computed";
    print_report(rep.str(), out_path, ss.str());
  });

  auto* afdi = app.add_subcommand("afdisyn", "approximate FDI filter bank");
  OptBuilder aib;
  afdi->add_option("model", model_path, "plant model JSON")->required();
  afdi->add_option("--sfdi", sfdi_path, "target structure matrix (file)");
  add_filter_outputs(afdi);
  add_synthesis_flags(afdi, aib);
  aib.add_ints(afdi, "--fd-select", "fd-select", "rows to design");
  aib.add_double(afdi, "--gamma", "gamma", "noise channel norm bound");
  aib.add_int(afdi, "--nonstd", "nonstd", "nonstandard-problem handling (1)");
  afdi->callback([&] {
    ModelHandle m, q, r;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    if (!sfdi_path.empty())
      aib.j["sfdi"] = json::parse(read_file(sfdi_path));
    StringHandle rep;
    fdk_status st =
        fdk_afdisyn(m.m, aib.options().c_str(), q.slot(), r.slot(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    if (!out_q.empty()) save_model(q.m, out_q);
    if (!out_r.empty()) save_model(r.m, out_r);
    json rj = json::parse(rep.str());
    std::ostringstream ss;
    ss << "bank of " << fdk_model_count(q.m)
       << " approximate FDI filter(s), gaps = " << rj.at("gaps").dump();
    print_report(rep.str(), out_path, ss.str());
  });

  // ---- emmsyn ----
  auto* emm = app.add_subcommand("emmsyn", "exact model-matching filter");
  OptBuilder mb;
  emm->add_option("model", model_path, "plant model JSON")->required();
  emm->add_option("reference", second_path, "reference model JSON")->required();
  add_filter_outputs(emm);
  emm->add_option("--output-m", out_m, "updating factor file");
  mb.add_double(emm, "--tol", "tol", "rank tolerance");
  mb.add_double(emm, "--smarg", "smarg", "stability margin");
  mb.add_double(emm, "--sdeg", "sdeg", "stability degree");
  mb.add_doubles(emm, "--poles", "poles", "pole placement list");
  mb.add_string(emm, "--normalize", "normalize", "gain|dcgain|infnorm");
  mb.add_matrix(emm, "--hdesign", "hdesign", "design matrix");
  mb.add_double(emm, "--freq", "freq", "left-invertibility test frequency");
  mb.add_int(emm, "--seed", "seed", "design seed");
  emm->callback([&] {
    ModelHandle m, ref, q, r, upd;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    if (int rc = load_model(second_path, ref)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_emmsyn(m.m, ref.m, mb.options().c_str(), q.slot(),
                               r.slot(), upd.slot(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    if (!out_q.empty()) save_model(q.m, out_q);
    if (!out_r.empty()) save_model(r.m, out_r);
    if (!out_m.empty()) save_model(upd.m, out_m);
    print_report(rep.str(), out_path, "model-matching filter computed");
  });

  // ---- emdsyn / amdsyn ----
  auto add_md_flags = [&](CLI::App* cmd, OptBuilder& b) {
    b.add_int(cmd, "--rdim", "rdim", "residual outputs per filter");
    b.add_doubles(cmd, "--md-freq", "md-freq", "strong detectability grid");
    b.add_flag(cmd, "--emdtest", "emdtest", "include disturbance channels");
    b.add_double(cmd, "--smarg", "smarg", "stability margin");
    b.add_double(cmd, "--sdeg", "sdeg", "stability degree");
    b.add_doubles(cmd, "--poles", "poles", "pole placement list");
    b.add_flag(cmd, "--full-order", "minimal", "disable least-order synthesis",
               true);
    b.add_flag(cmd, "--observer-basis", "nullspace",
               "use full-order observer bases", true);
    b.add_ints(cmd, "--md-select", "md-select", "filters to design");
    b.add_matrix(cmd, "--hdesign", "hdesign", "shared design matrix");
    b.add_flag(cmd, "--normalize", "normalize", "unit minimum off-diagonal");
    b.add_double(cmd, "--md-tol", "md-tol", "detectability threshold");
    b.add_double(cmd, "--md-gain-tol", "md-gain-tol", "gain threshold");
    b.add_double(cmd, "--tcond", "tcond", "condition-number bound");
    b.add_int(cmd, "--seed", "seed", "design seed");
  };

  for (bool approx : {false, true}) {
    auto* cmd = app.add_subcommand(
        approx ? "amdsyn" : "emdsyn",
        approx ? "approximate model detection filter bank"
               : "exact model detection filter bank");
    auto b = std::make_shared<OptBuilder>();
    cmd->add_option("model", model_path, "multimodel JSON")->required();
    add_filter_outputs(cmd);
    add_md_flags(cmd, *b);
    if (approx)
      b->add_int(cmd, "--nonstd", "nonstd", "nonstandard-problem handling (1)");
    cmd->callback([&, b, approx] {
      ModelHandle m, q, r;
      if (int rc = load_model(model_path, m)) std::exit(rc);
      StringHandle rep;
      fdk_status st =
          approx ? fdk_amdsyn(m.m, b->options().c_str(), q.slot(), r.slot(),
                              &rep.s)
                 : fdk_emdsyn(m.m, b->options().c_str(), q.slot(), r.slot(),
                              &rep.s);
      if (st != FDK_OK) std::exit(fail_status(st));
      if (!out_q.empty()) save_model(q.m, out_q);
      if (!out_r.empty()) save_model(r.m, out_r);
      std::ostringstream ss;
      ss << "bank of " << fdk_model_count(q.m)
         << " model detection filter(s) computed";
      print_report(rep.str(), out_path, ss.str());
    });
  }

  // ---- mddist / mddist2c ----
  auto add_dist_flags = [&](CLI::App* cmd, OptBuilder& b) {
    b.add_ints(cmd, "--md-select", "md-select", "selected rows");
    b.add_double(cmd, "--tol", "tol", "rank tolerance");
    b.add_string(cmd, "--distance", "distance", "nugap|inf|2");
    b.add_doubles(cmd, "--md-freq", "md-freq", "pointwise grid");
    b.add_double(cmd, "--offset", "offset", "boundary offset");
    b.add_flag(cmd, "--cdinp", "cdinp", "include disturbance channels");
    b.add_int(cmd, "--md-index", "md-index", "relative-distance index");
  };

  auto* mdd = app.add_subcommand("mddist", "pairwise model distances");
  OptBuilder db;
  mdd->add_option("model", model_path, "multimodel JSON")->required();
  mdd->add_option("-o,--output", out_path, "report file");
  add_dist_flags(mdd, db);
  mdd->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_mddist(m.m, db.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    print_report(rep.str(), out_path, "pairwise distance matrix computed");
  });

  auto* mdd2 = app.add_subcommand("mddist2c", "distances to a current model");
  OptBuilder d2b;
  mdd2->add_option("model", model_path, "multimodel JSON")->required();
  mdd2->add_option("current", second_path, "current model JSON")->required();
  mdd2->add_option("-o,--output", out_path, "report file");
  add_dist_flags(mdd2, d2b);
  mdd2->callback([&] {
    ModelHandle m, cur;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    if (int rc = load_model(second_path, cur)) std::exit(rc);
    StringHandle rep;
    fdk_status st =
        fdk_mddist2c(m.m, cur.m, d2b.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    json rj = json::parse(rep.str());
    std::ostringstream ss;
    ss << "nearest component model: " << rj.at("mind").get<int>();
    print_report(rep.str(), out_path, ss.str());
  });

  // ---- perf ----
  auto* perf = app.add_subcommand(
      "perf", "FDI performance (fscond / f2ngap / mmperf)");
  OptBuilder pb;
  perf->add_option("model", model_path, "internal form (or bank) JSON")
      ->required();
  std::string perf_ref;
  perf->add_option("--reference", perf_ref, "reference model for mmperf");
  perf->add_option("-o,--output", out_path, "report file");
  pb.add_string(perf, "--kind", "kind", "fscond|f2ngap|mmperf");
  pb.add_doubles(perf, "--fd-freq", "fd-freq", "frequency grid");
  pb.add_matrix(perf, "--sfdi", "sfdi", "structure matrix (JSON or file)");
  pb.add_string(perf, "--norm", "norm", "inf|2 (mmperf)");
  perf->callback([&] {
    ModelHandle m, ref;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    if (!perf_ref.empty())
      if (int rc = load_model(perf_ref, ref)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_perf(m.m, perf_ref.empty() ? nullptr : ref.m,
                             pb.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    print_report(rep.str(), out_path, "performance evaluated");
  });

  // ---- mdperf / mdmatch / mdgap ----
  auto add_mdeval_flags = [&](CLI::App* cmd, OptBuilder& b) {
    b.add_ints(cmd, "--md-select", "md-select", "selected filters");
    b.add_doubles(cmd, "--md-freq", "md-freq", "pointwise grid");
    b.add_flag(cmd, "--cdinp", "cdinp", "include disturbance channels");
    b.add_int(cmd, "--md-index", "md-index", "relative-gain index");
  };

  auto* mdp = app.add_subcommand("mdperf", "distance mapping performance");
  OptBuilder mpb;
  mdp->add_option("model", model_path, "N*N internal-form bank JSON")
      ->required();
  mdp->add_option("-o,--output", out_path, "report file");
  add_mdeval_flags(mdp, mpb);
  mdp->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_mdperf(m.m, mpb.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    print_report(rep.str(), out_path, "distance mapping performance computed");
  });

  auto* mdm = app.add_subcommand("mdmatch", "distance matching performance");
  OptBuilder mmb;
  mdm->add_option("model", model_path, "filter bank JSON")->required();
  mdm->add_option("current", second_path, "current model JSON")->required();
  mdm->add_option("-o,--output", out_path, "report file");
  add_mdeval_flags(mdm, mmb);
  mdm->callback([&] {
    ModelHandle m, cur;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    if (int rc = load_model(second_path, cur)) std::exit(rc);
    StringHandle rep;
    fdk_status st =
        fdk_mdmatch(m.m, cur.m, mmb.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    json rj = json::parse(rep.str());
    std::ostringstream ss;
    ss << "best matching component model: " << rj.at("mind").get<int>();
    print_report(rep.str(), out_path, ss.str());
  });

  auto* mdg = app.add_subcommand("mdgap", "model detection noise gaps");
  OptBuilder mgb;
  mdg->add_option("model", model_path, "N*N internal-form bank JSON")
      ->required();
  mdg->add_option("-o,--output", out_path, "report file");
  add_mdeval_flags(mdg, mgb);
  mdg->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle rep;
    fdk_status st = fdk_mdgap(m.m, mgb.options_no_seed().c_str(), &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    print_report(rep.str(), out_path, "noise gaps computed");
  });

  // ---- simulate ----
  auto* sim = app.add_subcommand(
      "simulate", "residual simulation with Narendra-type evaluation");
  OptBuilder smb;
  std::string csv_path = "residuals.csv";
  sim->add_option("model", model_path, "internal form (or bank) JSON")
      ->required();
  sim->add_option("--csv", csv_path, "time-series output (CSV)");
  sim->add_option("-o,--output", out_path, "report file");
  smb.add_strings(sim, "--signals", "signals",
                  "per-channel tokens: kind[:amp][@period]");
  smb.add_double(sim, "--t-final", "t-final", "simulation horizon");
  smb.add_double(sim, "--dt", "dt", "sample step (continuous systems)");
  smb.add_double(sim, "--alpha", "alpha", "instantaneous weight");
  smb.add_double(sim, "--beta", "beta", "low-pass weight");
  smb.add_double(sim, "--gamma", "gamma", "low-pass bandwidth");
  smb.add_double(sim, "--tau", "tau", "decision threshold");
  smb.add_int(sim, "--seed", "seed", "noise seed");
  sim->callback([&] {
    ModelHandle m;
    if (int rc = load_model(model_path, m)) std::exit(rc);
    StringHandle csv, rep;
    fdk_status st = fdk_simulate(m.m, smb.options().c_str(), &csv.s, &rep.s);
    if (st != FDK_OK) std::exit(fail_status(st));
    write_file(csv_path, csv.str());
    json rj = json::parse(rep.str());
    std::ostringstream ss;
    ss << "time series written to " << csv_path
       << ", decisions = " << rj.at("decision").dump();
    print_report(rep.str(), out_path, ss.str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors exit with 1
  }
  return 0;
}
