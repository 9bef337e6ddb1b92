#include "dercap/cli/io.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace dercap::cli {

std::string format_number(double v) {
  if (!std::isfinite(v)) return "inf";
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double parse_number(const std::string& cell) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size()) throw std::invalid_argument("not a number: '" + cell + "'");
  return v;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double or_inf(bool ok, double v) { return ok ? v : kInf; }

// NaN means "not computed" and is written as an empty cell.
std::string cell(double v) { return std::isnan(v) ? std::string() : format_number(v); }

}  // namespace

CapabilityRow capability_row(const capability::CapabilityPoint& pt, const feeder::SubstationParams& tap) {
  CapabilityRow r;
  const bool lo = pt.lower.feasible, hi = pt.upper.feasible;
  r.curtailment = pt.curtailment;
  r.q_base = pt.q_base;
  r.q_lower = or_inf(lo, pt.lower.q_kvar);
  r.q_upper = or_inf(hi, pt.upper.q_kvar);
  r.a = or_inf(lo, pt.range.a);
  r.b = or_inf(hi, pt.range.b);
  r.v0_lower = or_inf(lo, pt.lower.dispatch.v0);
  r.v0_upper = or_inf(hi, pt.upper.dispatch.v0);
  if (lo && hi) {
    const auto dl = capability::decoupling_range(pt.lower.dispatch.v0, tap);
    const auto du = capability::decoupling_range(pt.upper.dispatch.v0, tap);
    r.d_lo = std::max(dl.lo, du.lo);
    r.d_hi = std::min(dl.hi, du.hi);
  } else {
    r.d_lo = r.d_hi = kInf;
  }
  r.feasible_lower = lo;
  r.feasible_upper = hi;
  if (pt.has_worst_case) {
    r.feasible_lower = lo && pt.worst.feasible_lower;
    r.feasible_upper = hi && pt.worst.feasible_upper;
    r.wc_q_lower = or_inf(r.feasible_lower, pt.interval.reported_lower);
    r.wc_q_upper = or_inf(r.feasible_upper, pt.interval.reported_upper);
    r.case_id = pt.interval.case_id;
  } else {
    r.wc_q_lower = r.wc_q_upper = kNaN;
    r.case_id = lo && hi ? 1 : 0;
  }
  return r;
}

void write_capability_csv(std::ostream& out, const std::vector<CapabilityRow>& rows) {
  out << kCapabilityHeader << '\n';
  for (const auto& r : rows) {
    out << format_number(r.curtailment) << ',' << format_number(r.q_lower) << ',' << format_number(r.q_upper) << ','
        << format_number(r.q_base) << ',' << format_number(r.a) << ',' << format_number(r.b) << ','
        << format_number(r.v0_lower) << ',' << format_number(r.v0_upper) << ',' << format_number(r.d_lo) << ','
        << format_number(r.d_hi) << ',' << cell(r.wc_q_lower) << ',' << cell(r.wc_q_upper) << ',' << r.case_id << ','
        << (r.feasible_lower ? 1 : 0) << ',' << (r.feasible_upper ? 1 : 0) << '\n';
  }
}

std::vector<CapabilityRow> read_capability_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCapabilityHeader) throw std::runtime_error(path + ": unexpected header");
  std::vector<CapabilityRow> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) f.push_back(c);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 15) throw std::runtime_error(path + ": line " + std::to_string(n) + " needs 15 fields");
    try {
      CapabilityRow r;
      double* dst[] = {&r.curtailment, &r.q_lower, &r.q_upper, &r.q_base, &r.a,        &r.b,
                       &r.v0_lower,    &r.v0_upper, &r.d_lo,  &r.d_hi,   &r.wc_q_lower, &r.wc_q_upper};
      for (int k = 0; k < 12; ++k) *dst[k] = parse_number(f[k]);
      r.case_id = std::stoi(f[12]);
      if ((f[13] != "0" && f[13] != "1") || (f[14] != "0" && f[14] != "1"))
        throw std::invalid_argument("feasibility flags must be 0 or 1");
      r.feasible_lower = f[13] == "1";
      r.feasible_upper = f[14] == "1";
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ": line " + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

int apply_thread_limit() {
  if (const char* env = std::getenv("DERCAP_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

void RunManifest::add_input(const std::string& path) {
  for (const auto& in : inputs)
    if (in.first == path) return;
  inputs.emplace_back(path, sha256_file(path));
}

void RunManifest::count(const capability::CapabilitySide& side) { count(std::string(conic::to_string(side.status))); }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["tool_version"] = kVersion;
  j["inputs"] = nlohmann::json::array();
  for (const auto& [p, d] : inputs) j["inputs"].push_back({{"path", p}, {"sha256", d}});
  j["parameters"] = parameters;
  j["status_counts"] = status_counts;
  j["outputs"] = outputs;
  j["threads"] = threads;
  j["wall_clock_s"] = wall_clock_s;
  j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;
  return j;
}

void write_manifest(const std::string& dir, const RunManifest& manifest) {
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw std::runtime_error("cannot write " + dir + "/manifest.json");
  out << manifest.to_json().dump(2) << '\n';
}

}  // namespace dercap::cli
