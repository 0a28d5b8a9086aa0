#include "fdikit/fdikit.h"

#include <json.hpp>

#include <cstring>

#include "jsonio.hpp"
#include "mdetect.hpp"
#include "perf.hpp"
#include "simulate.hpp"
#include "synth.hpp"

using nlohmann::json;
using namespace fdikit;

struct fdk_model {
  std::vector<LtiModel> items;
  bool multi = false;
};

namespace {

thread_local std::string g_error;

template <typename F>
fdk_status guarded(F&& fn) {
  try {
    fn();
    return FDK_OK;
  } catch (const Error& e) {
    g_error = e.what();
    switch (e.code()) {
      case ErrorCode::invalid_argument:
        return FDK_ERR_USAGE;
      case ErrorCode::unsolvable:
        return FDK_ERR_UNSOLVABLE;
      case ErrorCode::numeric:
        return FDK_ERR_NUMERIC;
      case ErrorCode::unsupported:
        return FDK_ERR_UNSUPPORTED;
    }
    return FDK_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_error = e.what();
    return FDK_ERR_USAGE;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_options(const char* text, const std::vector<std::string>& allowed) {
  if (!text || !*text) return json::object();
  json j = json::parse(text, nullptr, true, true);
  if (!j.is_object()) fail_arg("options must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      fail_arg("unknown option key '" + it.key() + "'");
  }
  return j;
}

FreqSet read_freqs(const json& j, const char* key) {
  FreqSet out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (v.is_number()) {
    out.omegas.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& x : v) out.omegas.push_back(x.get<double>());
  } else {
    fail_arg(std::string(key) + ": expected a number or array");
  }
  return out;
}

std::vector<cplx> read_poles(const json& j, const char* key) {
  std::vector<cplx> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) {
    if (v.is_number())
      out.push_back(cplx(v.get<double>(), 0.0));
    else if (v.is_array() && v.size() == 2)
      out.push_back(cplx(v[0].get<double>(), v[1].get<double>()));
    else
      fail_arg("poles: expected numbers or [re, im] pairs");
  }
  return out;
}

MatrixXd read_matrix(const json& j, const char* key) {
  if (!j.contains(key)) return MatrixXd();
  const json& v = j.at(key);
  int rows = static_cast<int>(v.size());
  int cols = rows ? static_cast<int>(v[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = v[i][k].get<double>();
  return m;
}

BoolMatrix read_struct(const json& v) {
  int rows = static_cast<int>(v.size());
  int cols = rows ? static_cast<int>(v[0].size()) : 0;
  BoolMatrix s(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) s(i, k) = v[i][k].get<double>() != 0.0;
  return s;
}

json num(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json("nan");
  return json(v);
}

json vec_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

json ivec_json(const std::vector<int>& v) {
  json out = json::array();
  for (int x : v) out.push_back(x);
  return out;
}

json mat_json(const MatrixXd& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(num(m(i, k)));
    out.push_back(row);
  }
  return out;
}

json bool_json(const BoolMatrix& s) {
  json out = json::array();
  for (int i = 0; i < s.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < s.cols(); ++k) row.push_back(s(i, k) ? 1 : 0);
    out.push_back(row);
  }
  return out;
}

json pages_json(const StructMatrix& s) {
  json out = json::array();
  for (const auto& p : s.pages) out.push_back(bool_json(p));
  return out;
}

const LtiModel& single(const fdk_model* m, const char* what) {
  if (!m || m->items.size() != 1)
    fail_arg(std::string(what) + ": expected a single model handle");
  return m->items[0];
}

MultiModel as_multi(const fdk_model* m) {
  if (!m || m->items.empty()) fail_arg("expected a multimodel handle");
  MultiModel mm;
  mm.components = m->items;
  return mm;
}

fdk_model* wrap(LtiModel m) {
  auto* out = new fdk_model;
  out->items.push_back(std::move(m));
  return out;
}

fdk_model* wrap_bank(std::vector<LtiModel> items) {
  auto* out = new fdk_model;
  out->items = std::move(items);
  out->multi = true;
  return out;
}

void read_syn_base(const json& j, SynOpts& o) {
  o.tol = j.value("tol", 0.0);
  o.fdtol = j.value("fd-tol", 1e-4);
  o.fdgaintol = j.value("fd-gain-tol", 1e-2);
  if (j.contains("rdim")) o.rdim = j.at("rdim").get<int>();
  o.freqs = read_freqs(j, "fd-freq");
  if (j.contains("smarg")) o.smarg = j.at("smarg").get<double>();
  if (j.contains("sdeg")) o.sdeg = j.at("sdeg").get<double>();
  o.poles = read_poles(j, "poles");
  o.minimal = j.value("minimal", true);
  o.observer_basis = !j.value("nullspace", true);
  if (j.contains("hdesign")) o.hdesign = read_matrix(j, "hdesign");
  o.tcond = j.value("tcond", 1e4);
  o.seed = j.value("seed", 0ull);
}

const std::vector<std::string> kSynKeys = {
    "tol",     "fd-tol", "fd-gain-tol", "rdim",    "fd-freq", "smarg",
    "sdeg",    "poles",  "minimal",     "nullspace", "hdesign", "tcond",
    "seed"};

std::vector<std::string> with(const std::vector<std::string>& base,
                              std::initializer_list<const char*> extra) {
  std::vector<std::string> out = base;
  for (const char* e : extra) out.push_back(e);
  return out;
}

json filter_report(const SynthesisReport& info) {
  json rep;
  rep["hdesign"] = mat_json(info.hdesign);
  rep["degs"] = ivec_json(info.degs);
  rep["s"] = bool_json(info.s);
  if (info.hdesign2.size()) rep["hdesign2"] = mat_json(info.hdesign2);
  if (!info.degs2.empty()) rep["degs2"] = ivec_json(info.degs2);
  if (info.s2.size()) rep["s2"] = bool_json(info.s2);
  if (std::isfinite(info.gap) || info.gap > 0) rep["gap"] = num(info.gap);
  rep["seed"] = info.seed;
  return rep;
}

void read_md_opts(const json& j, MdSynOpts& o) {
  if (j.contains("rdim")) o.rdim = j.at("rdim").get<int>();
  o.freqs = read_freqs(j, "md-freq");
  o.emdtest = j.value("emdtest", false);
  if (j.contains("smarg")) o.smarg = j.at("smarg").get<double>();
  if (j.contains("sdeg")) o.sdeg = j.at("sdeg").get<double>();
  o.poles = read_poles(j, "poles");
  o.minimal = j.value("minimal", true);
  o.nullspace_minimal = j.value("nullspace", true);
  if (j.contains("md-select"))
    for (const auto& v : j.at("md-select")) o.mdselect.push_back(v.get<int>());
  if (j.contains("hdesign")) o.hdesign = {read_matrix(j, "hdesign")};
  o.normalize = j.value("normalize", false);
  o.mdtol = j.value("md-tol", 1e-4);
  o.mdgaintol = j.value("md-gain-tol", 1e-2);
  o.tcond = j.value("tcond", 1e4);
  o.seed = j.value("seed", 0ull);
  o.nonstd = j.value("nonstd", 1);
}

const std::vector<std::string> kMdSynKeys = {
    "rdim",    "md-freq",    "emdtest", "smarg",     "sdeg",
    "poles",   "minimal",    "nullspace", "md-select", "hdesign",
    "normalize", "md-tol",   "md-gain-tol", "tcond",   "seed",
    "nonstd"};

void read_dist_opts(const json& j, MdDistOpts& o) {
  if (j.contains("md-select"))
    for (const auto& v : j.at("md-select")) o.mdselect.push_back(v.get<int>());
  o.tol = j.value("tol", 0.0);
  if (j.contains("distance")) {
    std::string d = j.at("distance").get<std::string>();
    if (d == "nugap")
      o.distance = MdDistance::nugap;
    else if (d == "inf")
      o.distance = MdDistance::hinf;
    else if (d == "2")
      o.distance = MdDistance::h2;
    else
      fail_arg("distance: expected 'nugap', 'inf' or '2'");
  }
  o.freqs = read_freqs(j, "md-freq");
  o.offset = j.value("offset", boundary_offset);
  o.cdinp = j.value("cdinp", false);
  o.mdindex = j.value("md-index", 3);
}

const std::vector<std::string> kDistKeys = {"md-select", "tol",    "distance",
                                            "md-freq",   "offset", "cdinp",
                                            "md-index"};

void read_mdperf_opts(const json& j, MdPerfOpts& o) {
  if (j.contains("md-select"))
    for (const auto& v : j.at("md-select")) o.mdselect.push_back(v.get<int>());
  o.freqs = read_freqs(j, "md-freq");
  o.cdinp = j.value("cdinp", false);
  o.mdindex = j.value("md-index", 3);
}

// Unflatten an N*N grid handle into rows.
std::vector<std::vector<LtiModel>> grid_of(const fdk_model* rgrid) {
  size_t total = rgrid ? rgrid->items.size() : 0;
  size_t n = 0;
  while (n * n < total) ++n;
  if (n * n != total) fail_arg("internal-form grid must hold N*N members");
  std::vector<std::vector<LtiModel>> out(n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) out[i].push_back(rgrid->items[i * n + j]);
  return out;
}

}  // namespace

extern "C" {

const char* fdk_last_error(void) { return g_error.c_str(); }

fdk_status fdk_model_from_json(const char* text, fdk_model** out) {
  return guarded([&] {
    if (!text || !out) fail_arg("fdk_model_from_json: null argument");
    auto items = models_from_json(text);
    auto* m = new fdk_model;
    m->items = std::move(items);
    m->multi = std::string(text).find("\"models\"") != std::string::npos;
    *out = m;
  });
}

fdk_status fdk_model_to_json(const fdk_model* m, char** out) {
  return guarded([&] {
    if (!m || !out) fail_arg("fdk_model_to_json: null argument");
    *out = dup_string(m->multi || m->items.size() != 1
                          ? models_to_json(m->items)
                          : model_to_json(m->items[0]));
  });
}

void fdk_model_free(fdk_model* m) { delete m; }
void fdk_string_free(char* s) { std::free(s); }

size_t fdk_model_count(const fdk_model* m) { return m ? m->items.size() : 0; }

fdk_status fdk_genspec(const fdk_model* sysf, const char* options,
                       char** report) {
  return guarded([&] {
    json j = parse_options(options, {"tol", "fd-tol", "fd-gain-tol", "fd-freq",
                                     "sdeg"});
    GenspecOpts o;
    o.tol = j.value("tol", 0.0);
    o.fdtol = j.value("fd-tol", 1e-4);
    o.fdgaintol = j.value("fd-gain-tol", 1e-2);
    o.freqs = read_freqs(j, "fd-freq");
    if (j.contains("sdeg")) o.sdeg = j.at("sdeg").get<double>();
    StructMatrix s = fdigenspec(single(sysf, "genspec"), o);
    json rep;
    rep["s"] = bool_json(s.all());
    rep["rows"] = s.rows();
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_chkspec(const fdk_model* sysf, const char* sfdi,
                       const char* options, char** report) {
  return guarded([&] {
    if (!sfdi) fail_arg("chkspec: missing SFDI");
    json j = parse_options(options, {"tol", "fd-tol", "fd-gain-tol", "fd-freq",
                                     "seed"});
    ChkspecOpts o;
    o.tol = j.value("tol", 0.0);
    o.fdtol = j.value("fd-tol", 1e-4);
    o.fdgaintol = j.value("fd-gain-tol", 1e-2);
    o.freqs = read_freqs(j, "fd-freq");
    o.seed = j.value("seed", 0ull);
    BoolMatrix s = struct_from_json(sfdi);
    ChkspecResult res = fdichkspec(single(sysf, "chkspec"), s, o);
    json rep;
    rep["rdims"] = ivec_json(res.rdims);
    rep["orders"] = ivec_json(res.orders);
    rep["leastorders"] = ivec_json(res.leastorders);
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_tspec(const fdk_model* r, const char* options, char** report) {
  return guarded([&] {
    json j = parse_options(options, {"tol", "fd-tol", "fd-freq", "block"});
    TspecOpts o;
    o.tol = j.value("tol", 0.0);
    o.fdtol = j.value("fd-tol", 1e-4);
    o.freqs = read_freqs(j, "fd-freq");
    o.block = j.value("block", false);
    StructMatrix s = r->multi ? fditspec(r->items, o)
                              : fditspec(single(r, "tspec"), o);
    json rep;
    rep["s"] = bool_json(s.all());
    rep["pages"] = pages_json(s);
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_sspec(const fdk_model* r, const char* options, char** report) {
  return guarded([&] {
    json j = parse_options(options, {"fd-gain-tol", "fd-freq", "block"});
    SspecOpts o;
    o.gaintol = j.value("fd-gain-tol", 1e-2);
    FreqSet f = read_freqs(j, "fd-freq");
    if (!f.empty()) o.freqs = f;
    o.block = j.value("block", false);
    SspecResult res = r->multi ? fdisspec(r->items, o)
                               : fdisspec(single(r, "sspec"), o);
    json rep;
    rep["s"] = bool_json(res.s.all());
    rep["pages"] = pages_json(res.s);
    rep["gains"] = mat_json(res.gains);
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_efdsyn(const fdk_model* sysf, const char* options, fdk_model** q,
                      fdk_model** r, char** report) {
  return guarded([&] {
    json j = parse_options(options, kSynKeys);
    SynOpts o;
    read_syn_base(j, o);
    FdiFilter f = efdsyn(single(sysf, "efdsyn"), o);
    if (q) *q = wrap(f.q);
    if (r) *r = wrap(f.r);
    if (report) *report = dup_string(filter_report(f.info).dump());
  });
}

fdk_status fdk_afdsyn(const fdk_model* sysf, const char* options, fdk_model** q,
                      fdk_model** r, char** report) {
  return guarded([&] {
    json j = parse_options(
        options, with(kSynKeys, {"gamma", "exact", "hdesign2", "nonstd",
                                 "freq"}));
    AfdOpts o;
    read_syn_base(j, o);
    o.gamma = j.value("gamma", 1.0);
    o.exact = j.value("exact", false);
    if (j.contains("hdesign2")) o.hdesign2 = read_matrix(j, "hdesign2");
    o.nonstd = j.value("nonstd", 1);
    if (j.contains("freq")) o.freq = cplx(j.at("freq").get<double>(), 0.0);
    FdiFilter f = afdsyn(single(sysf, "afdsyn"), o);
    if (q) *q = wrap(f.q);
    if (r) *r = wrap(f.r);
    if (report) *report = dup_string(filter_report(f.info).dump());
  });
}

namespace {

json bank_report(const std::vector<FdiFilter>& bank) {
  json rep;
  json gaps = json::array(), hs = json::array(), degs = json::array();
  for (const auto& f : bank) {
    gaps.push_back(num(f.info.gap));
    hs.push_back(mat_json(f.info.hdesign));
    degs.push_back(ivec_json(f.info.degs));
  }
  rep["gaps"] = gaps;
  rep["hdesign"] = hs;
  rep["degs"] = degs;
  return rep;
}

}  // namespace

fdk_status fdk_efdisyn(const fdk_model* sysf, const char* options,
                       fdk_model** qbank, fdk_model** rbank, char** report) {
  return guarded([&] {
    json j = parse_options(options, with(kSynKeys, {"sfdi", "fd-select"}));
    EfdiOpts o;
    read_syn_base(j, o);
    if (j.contains("sfdi")) o.sfdi = read_struct(j.at("sfdi"));
    if (j.contains("fd-select"))
      for (const auto& v : j.at("fd-select")) o.fdselect.push_back(v.get<int>());
    auto bank = efdisyn(single(sysf, "efdisyn"), o);
    std::vector<LtiModel> qs, rs;
    for (auto& f : bank) {
      qs.push_back(f.q);
      rs.push_back(f.r);
    }
    if (qbank) *qbank = wrap_bank(std::move(qs));
    if (rbank) *rbank = wrap_bank(std::move(rs));
    if (report) *report = dup_string(bank_report(bank).dump());
  });
}

fdk_status fdk_afdisyn(const fdk_model* sysf, const char* options,
                       fdk_model** qbank, fdk_model** rbank, char** report) {
  return guarded([&] {
    json j = parse_options(
        options, with(kSynKeys, {"sfdi", "fd-select", "gamma", "exact",
                                 "hdesign2", "nonstd", "freq"}));
    AfdiOpts o;
    read_syn_base(j, o);
    if (j.contains("sfdi")) o.sfdi = read_struct(j.at("sfdi"));
    if (j.contains("fd-select"))
      for (const auto& v : j.at("fd-select")) o.fdselect.push_back(v.get<int>());
    o.gamma = j.value("gamma", 1.0);
    o.exact = j.value("exact", false);
    o.nonstd = j.value("nonstd", 1);
    auto bank = afdisyn(single(sysf, "afdisyn"), o);
    std::vector<LtiModel> qs, rs;
    for (auto& f : bank) {
      qs.push_back(f.q);
      rs.push_back(f.r);
    }
    if (qbank) *qbank = wrap_bank(std::move(qs));
    if (rbank) *rbank = wrap_bank(std::move(rs));
    if (report) *report = dup_string(bank_report(bank).dump());
  });
}

fdk_status fdk_emmsyn(const fdk_model* sysf, const fdk_model* sysr,
                      const char* options, fdk_model** q, fdk_model** r,
                      fdk_model** m, char** report) {
  return guarded([&] {
    json j = parse_options(options, {"tol", "smarg", "sdeg", "poles",
                                     "normalize", "hdesign", "freq", "seed"});
    EmmOpts o;
    o.tol = j.value("tol", 0.0);
    if (j.contains("smarg")) o.smarg = j.at("smarg").get<double>();
    if (j.contains("sdeg")) o.sdeg = j.at("sdeg").get<double>();
    o.poles = read_poles(j, "poles");
    if (j.contains("normalize")) {
      std::string n = j.at("normalize").get<std::string>();
      o.normalize = n == "dcgain" ? MNormalize::dcgain
                    : n == "infnorm" ? MNormalize::infnorm
                                     : MNormalize::gain;
    }
    if (j.contains("hdesign")) o.hdesign = read_matrix(j, "hdesign");
    if (j.contains("freq")) o.freq = cplx(j.at("freq").get<double>(), 0.0);
    o.seed = j.value("seed", 0ull);
    EmmResult res = emmsyn(single(sysf, "emmsyn"), single(sysr, "emmsyn"), o);
    if (q) *q = wrap(res.filter.q);
    if (r) *r = wrap(res.filter.r);
    if (m) *m = wrap(res.m);
    if (report) *report = dup_string(filter_report(res.filter.info).dump());
  });
}

namespace {

json md_bank_report(const MdBank& bank, bool with_gaps) {
  json rep;
  rep["mdperf"] = mat_json(bank.mdperf);
  if (with_gaps) rep["mdgap"] = vec_json(bank.mdgap);
  json hs = json::array();
  for (const auto& h : bank.hdesign) hs.push_back(mat_json(h));
  rep["hdesign"] = hs;
  rep["n"] = static_cast<int>(bank.q.size());
  return rep;
}

void split_md_bank(const MdBank& bank, fdk_model** qbank, fdk_model** rgrid) {
  if (qbank) *qbank = wrap_bank(bank.q);
  if (rgrid) {
    std::vector<LtiModel> flat;
    for (const auto& row : bank.r)
      for (const auto& rij : row) flat.push_back(rij);
    *rgrid = wrap_bank(std::move(flat));
  }
}

}  // namespace

fdk_status fdk_emdsyn(const fdk_model* mm, const char* options,
                      fdk_model** qbank, fdk_model** rgrid, char** report) {
  return guarded([&] {
    json j = parse_options(options, kMdSynKeys);
    MdSynOpts o;
    read_md_opts(j, o);
    MdBank bank = emdsyn(as_multi(mm), o);
    split_md_bank(bank, qbank, rgrid);
    if (report) *report = dup_string(md_bank_report(bank, false).dump());
  });
}

fdk_status fdk_amdsyn(const fdk_model* mm, const char* options,
                      fdk_model** qbank, fdk_model** rgrid, char** report) {
  return guarded([&] {
    json j = parse_options(options, kMdSynKeys);
    MdSynOpts o;
    read_md_opts(j, o);
    MdBank bank = amdsyn(as_multi(mm), o);
    split_md_bank(bank, qbank, rgrid);
    if (report) *report = dup_string(md_bank_report(bank, true).dump());
  });
}

fdk_status fdk_mddist(const fdk_model* mm, const char* options,
                      char** report) {
  return guarded([&] {
    json j = parse_options(options, kDistKeys);
    MdDistOpts o;
    read_dist_opts(j, o);
    MdDistResult res = mddist(as_multi(mm), o);
    json rep;
    rep["dist"] = mat_json(res.dist);
    rep["fpeak"] = mat_json(res.fpeak);
    json perm = json::array();
    for (int i = 0; i < res.perm.rows(); ++i) {
      json row = json::array();
      for (int k = 0; k < res.perm.cols(); ++k) row.push_back(res.perm(i, k));
      perm.push_back(row);
    }
    rep["perm"] = perm;
    rep["reldist"] = vec_json(res.reldist);
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_mddist2c(const fdk_model* mm, const fdk_model* sys,
                        const char* options, char** report) {
  return guarded([&] {
    json j = parse_options(options, kDistKeys);
    MdDistOpts o;
    read_dist_opts(j, o);
    MdDist2cResult res = mddist2c(as_multi(mm), single(sys, "mddist2c"), o);
    json rep;
    rep["dist"] = vec_json(res.dist);
    rep["fpeak"] = vec_json(res.fpeak);
    rep["mind"] = res.mind;
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_perf(const fdk_model* r, const fdk_model* sysr,
                    const char* options, char** report) {
  return guarded([&] {
    json j = parse_options(options,
                           {"kind", "fd-freq", "sfdi", "norm"});
    std::string kind = j.value("kind", "f2ngap");
    FreqSet freqs = read_freqs(j, "fd-freq");
    BoolMatrix s;
    if (j.contains("sfdi")) s = read_struct(j.at("sfdi"));
    json rep;
    if (kind == "fscond") {
      FsCondResult res = r->multi ? fdifscond(r->items, freqs, s)
                                  : fdifscond(single(r, "perf"), freqs, s);
      rep["fscond"] = vec_json(res.fscond);
      rep["beta"] = vec_json(res.beta);
      rep["gamma"] = vec_json(res.gamma);
    } else if (kind == "f2ngap") {
      GapResult res = r->multi ? fdif2ngap(r->items, freqs, s)
                               : fdif2ngap(single(r, "perf"), freqs, s);
      rep["gap"] = vec_json(res.gap);
      rep["beta"] = vec_json(res.beta);
      rep["gamma"] = vec_json(res.gamma);
    } else if (kind == "mmperf") {
      MmNorm nrm = j.value("norm", std::string("inf")) == "2" ? MmNorm::two
                                                              : MmNorm::inf;
      if (r->multi) {
        std::vector<LtiModel> refs;
        const std::vector<LtiModel>* refptr = nullptr;
        if (sysr) {
          refs = sysr->items;
          refptr = &refs;
        }
        rep["gamma"] = vec_json(fdimmperf(r->items, refptr, nrm, s));
      } else {
        const LtiModel* ref = sysr ? &single(sysr, "perf") : nullptr;
        rep["gamma"] = num(fdimmperf(single(r, "perf"), ref, nrm, s));
      }
    } else {
      fail_arg("perf: kind must be 'fscond', 'f2ngap' or 'mmperf'");
    }
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_mdperf(const fdk_model* rgrid, const char* options,
                      char** report) {
  return guarded([&] {
    json j = parse_options(options,
                           {"md-select", "md-freq", "cdinp", "md-index"});
    MdPerfOpts o;
    read_mdperf_opts(j, o);
    MdPerfResult res = mdperf(grid_of(rgrid), o);
    json rep;
    rep["gains"] = mat_json(res.gains);
    rep["fpeak"] = mat_json(res.fpeak);
    json perm = json::array();
    for (int i = 0; i < res.perm.rows(); ++i) {
      json row = json::array();
      for (int k = 0; k < res.perm.cols(); ++k) row.push_back(res.perm(i, k));
      perm.push_back(row);
    }
    rep["perm"] = perm;
    rep["relgain"] = vec_json(res.relgain);
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_mdmatch(const fdk_model* qbank, const fdk_model* sys,
                       const char* options, char** report) {
  return guarded([&] {
    json j = parse_options(options,
                           {"md-select", "md-freq", "cdinp", "md-index"});
    MdPerfOpts o;
    read_mdperf_opts(j, o);
    if (!qbank) fail_arg("mdmatch: missing filter bank");
    MdMatchResult res = mdmatch(qbank->items, single(sys, "mdmatch"), o);
    json rep;
    rep["gains"] = vec_json(res.gains);
    rep["fpeak"] = vec_json(res.fpeak);
    rep["mind"] = res.mind;
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_mdgap(const fdk_model* rgrid, const char* options,
                     char** report) {
  return guarded([&] {
    json j = parse_options(options,
                           {"md-select", "md-freq", "cdinp", "md-index"});
    MdPerfOpts o;
    read_mdperf_opts(j, o);
    MdGapResult res = mdgap(grid_of(rgrid), o);
    json rep;
    rep["gap"] = vec_json(res.gap);
    rep["beta"] = vec_json(res.beta);
    rep["gamma"] = vec_json(res.gamma);
    *report = dup_string(rep.dump());
  });
}

fdk_status fdk_simulate(const fdk_model* bank, const char* options, char** csv,
                        char** report) {
  return guarded([&] {
    json j = parse_options(options, {"signals", "t-final", "dt", "alpha",
                                     "beta", "gamma", "tau", "seed"});
    SimulateOpts o;
    if (j.contains("signals"))
      for (const auto& v : j.at("signals"))
        o.signals.push_back(parse_signal_token(v.get<std::string>()));
    o.t_final = j.value("t-final", 10.0);
    o.dt = j.value("dt", 0.01);
    o.alpha = j.value("alpha", 0.9);
    o.beta = j.value("beta", 0.1);
    o.gamma = j.value("gamma", 10.0);
    o.tau = j.value("tau", 0.1);
    o.seed = j.value("seed", 0ull);
    if (!bank) fail_arg("simulate: missing bank");
    SimulationResult res = simulate_bank(bank->items, o);
    if (csv) *csv = dup_string(simulation_csv(res));
    if (report) {
      json rep;
      json dec = json::array();
      for (bool b : res.decision) dec.push_back(b ? 1 : 0);
      rep["decision"] = dec;
      json tf = json::array();
      for (int i = 0; i < res.theta.cols(); ++i)
        tf.push_back(num(res.theta(res.theta.rows() - 1, i)));
      rep["theta_final"] = tf;
      *report = dup_string(rep.dump());
    }
  });
}

}  // extern "C"
