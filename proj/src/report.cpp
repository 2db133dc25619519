#include "delaysof/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "delaysof/errors.hpp"

namespace delaysof {

using nlohmann::ordered_json;

ReportFormat parse_format(const std::string& text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "text") return ReportFormat::Text;
  throw ContractError("unknown report format '" + text + "' (json or text)");
}

const std::string& RunReport::status() const { return body.at("status").get_ref<const std::string&>(); }

namespace {

std::string num(const ordered_json& v, const char* fmt = "%.6g") {
  if (v.is_null()) return "-";
  if (v.is_number()) {
    char buf[48];
    std::snprintf(buf, sizeof buf, fmt, v.get<double>());
    return buf;
  }
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string pass(const ordered_json& o) { return o.value("pass", false) ? "pass" : "FAIL"; }

const ordered_json& at_or_null(const ordered_json& j, const char* key) {
  static const ordered_json null;
  auto it = j.find(key);
  return it == j.end() ? null : *it;
}

std::string text_report(const ordered_json& r) {
  std::ostringstream os;
  auto row = [&](const std::string& k, const std::string& v) {
    os << "  " << k << std::string(k.size() < 18 ? 18 - k.size() : 1, ' ') << v << "\n";
  };
  os << "delaysof " << num(r["tool"]["version"]) << "  mode " << num(r["mode"]) << "\n";
  row("status", num(r["status"]));
  row("exit code", num(r["exit_code"], "%.0f"));
  for (const auto& f : at_or_null(r, "flags")) row("FLAG", f.get<std::string>());
  const auto& b = at_or_null(r, "certified_bounds");
  row("certified bounds", b.is_null() ? "-" : "[" + num(b["d_min"]) + ", " + num(b["d_max"]) + "]");
  row("gain", at_or_null(r, "gain").is_null() ? "-" : r["gain"].dump());
  row("margin", num(at_or_null(r, "margin"), "%.6e"));
  if (!at_or_null(r, "rho").is_null()) row("rho", num(r["rho"]));
  if (const auto& ref = at_or_null(r, "reference"); !ref.is_null()) {
    row("reference gain", ref["gain"].dump());
    row("max |K - K_ref|", num(ref["max_abs_deviation"]) + (ref["within_tolerance"].get<bool>() ? " (within " : " (outside ") +
                               num(ref["tolerance"]) + ")");
  }
  const auto& orc = at_or_null(r, "oracles");
  if (!orc.is_null() && !orc.empty()) {
    os << "oracles\n";
    if (orc.contains("recertification")) {
      const auto& c = orc["recertification"];
      row("recertification", num(c["status"]) + ", margin " + num(c["margin"], "%.6e"));
    }
    if (orc.contains("spectral")) {
      const auto& s = orc["spectral"];
      row("spectral", pass(s) + ", max radius " + num(s["max_radius"], "%.9f"));
    }
    if (orc.contains("simulation")) {
      const auto& s = orc["simulation"];
      row("simulation", pass(s) + ", " + num(s["passed"]) + "/" + num(s["total"]) + " runs, T = " + num(s["steps"]) +
                            ", diverged " + num(s["diverged"]) + ", worst ratio " + num(s["worst_ratio"], "%.3e"));
    }
    if (orc.contains("dissipation_chain")) {
      const auto& s = orc["dissipation_chain"];
      row("dissipation chain", pass(s) + ", " + num(s["passed"]) + "/" + num(s["samples"]) + " samples");
    }
  }
  if (const auto& scan = at_or_null(r, "delay_scan"); !scan.is_null() && !scan.empty()) {
    os << "delay scan\n    d_max  status                margin        rho\n";
    for (const auto& e : scan) {
      char line[160];
      std::snprintf(line, sizeof line, "    %5d  %-20s  %12.5e  %s\n", e["d_max"].get<int>(),
                    e["status"].get<std::string>().c_str(), e["margin"].is_null() ? 0.0 : e["margin"].get<double>(),
                    num(e["rho"]).c_str());
      os << line;
    }
  }
  if (const auto& sweep = at_or_null(r, "rho_sweep"); !sweep.is_null() && sweep.size() > 1) {
    int certified = 0;
    for (const auto& e : sweep) certified += e["status"] == "feasible-certified" ? 1 : 0;
    row("rho sweep", std::to_string(certified) + "/" + std::to_string(sweep.size()) + " grid points certified");
  }
  if (const auto& t = at_or_null(r, "timings"); !t.is_null()) row("wall time [s]", num(t["total_seconds"], "%.3f"));
  return os.str();
}

// nlohmann writes non-finite doubles as null already; make that explicit
// so a parsed report compares equal to the exported one.
void scrub(ordered_json& j) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    j = nullptr;
  } else if (j.is_structured()) {
    for (auto& v : j) scrub(v);
  }
}

}  // namespace

std::string export_report(const RunReport& report, ReportFormat format) {
  ordered_json body = report.body;
  scrub(body);
  if (format == ReportFormat::Json) return body.dump(2) + "\n";
  return text_report(body);
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EnvironmentError(path + ": cannot open for writing");
  out << contents;
  out.close();
  if (!out) throw EnvironmentError(path + ": write failed");
}

}  // namespace delaysof
