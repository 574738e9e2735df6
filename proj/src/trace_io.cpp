#include <fstream>
#include <limits>
#include <sstream>

#include "rgae/diagnostics.hpp"
#include "rgae/errors.hpp"

namespace rgae {

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols = {
      "epoch",          "lambda_fr",         "lambda_fr_baseline", "lambda_fd",          "lambda_fd_baseline",
      "omega_size",     "acc_all",           "acc_omega",          "acc_complement",     "nmi",
      "ari",            "links_total",       "links_true",         "links_false",        "links_added_true",
      "links_added_false", "links_deleted_true", "links_deleted_false", "l_total",         "l_clus",
      "l_bce",          "l_C_self",          "l_R_self",           "l_C_clus",           "gamma",
      "wall_time"};
  return cols;
}

void write_trace_csv(const DiagnosticTrace& trace, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.precision(std::numeric_limits<double>::max_digits10);
    const auto& cols = trace_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    for (const TraceRecord& r : trace.records) {
      auto lam = [&](double v) -> std::string {
        if (!r.lambda_available) return "";
        std::ostringstream s;
        s.precision(std::numeric_limits<double>::max_digits10);
        s << v;
        return s.str();
      };
      out << r.epoch << ',' << lam(r.lambda_fr) << ',' << lam(r.lambda_fr_baseline) << ',' << lam(r.lambda_fd) << ','
          << lam(r.lambda_fd_baseline) << ',' << r.omega_size << ',' << r.acc_all << ',' << r.acc_omega << ','
          << r.acc_complement << ',' << r.nmi << ',' << r.ari << ',' << r.links.links_total << ','
          << r.links.links_true << ',' << r.links.links_false << ',' << r.links.links_added_true << ','
          << r.links.links_added_false << ',' << r.links.links_deleted_true << ',' << r.links.links_deleted_false
          << ',' << r.loss.l_total << ',' << r.loss.l_clus << ',' << r.loss.l_bce << ',' << r.loss.l_C_self << ','
          << r.loss.l_R_self << ',' << r.loss.l_C_clus << ',' << r.loss.gamma << ',' << r.wall_time << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json trace_summary(const DiagnosticTrace& trace) {
  nlohmann::json j;
  j["epochs"] = trace.records.size();
  if (trace.records.empty()) return j;
  const TraceRecord& last = trace.records.back();
  j["final"] = {{"epoch", last.epoch},   {"omega_size", last.omega_size}, {"acc", last.acc_all},
                {"nmi", last.nmi},       {"ari", last.ari},               {"links_total", last.links.links_total},
                {"links_false", last.links.links_false}, {"wall_time", last.wall_time}};
  double best_acc = 0.0;
  std::size_t best_epoch = 0;
  for (const auto& r : trace.records)
    if (r.acc_all > best_acc) {
      best_acc = r.acc_all;
      best_epoch = r.epoch;
    }
  j["best_acc"] = best_acc;
  j["best_acc_epoch"] = best_epoch;
  if (trace.records.front().lambda_available) {
    j["first_lambda_fr"] = trace.records.front().lambda_fr;
    j["first_lambda_fd"] = trace.records.front().lambda_fd;
  }
  return j;
}

}  // namespace rgae
