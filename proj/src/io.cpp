#include "io.hpp"

#include <cctype>
#include <cinttypes>
#include <cstring>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace spdsim {

namespace {

void write_all(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << body;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string header_lines(const Config& cfg) {
  std::istringstream echo(echo_config(cfg));
  std::string out, line;
  while (std::getline(echo, line)) {
    out += "# ";
    out += line;
    out += '\n';
  }
  return out;
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

FileRecordSink::FileRecordSink(const std::string& path, const Config& cfg)
    : path_(path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw IoError("cannot open for writing: " + path);
  std::string header = header_lines(cfg);
  if (std::fwrite(header.data(), 1, header.size(), f_) != header.size()) {
    std::fclose(f_);
    f_ = nullptr;
    throw IoError("write failed: " + path);
  }
}

FileRecordSink::~FileRecordSink() {
  if (f_) std::fclose(f_);
}

void FileRecordSink::on_record(const TimestampRecord& rec) {
  std::fprintf(f_, "%" PRId64 " %c\n", rec.time_ps,
               rec.kind == RecordKind::Detection ? 'D' : 'S');
}

void FileRecordSink::close() {
  if (!f_) return;
  int rc = std::fclose(f_);
  f_ = nullptr;
  if (rc != 0) throw IoError("write failed: " + path_);
}

void write_timestamp_file(const std::string& path, const Config& cfg,
                          std::span<const TimestampRecord> records) {
  FileRecordSink sink(path, cfg);
  for (const auto& rec : records) sink.on_record(rec);
  sink.close();
}

LoadedRecords load_timestamp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);

  LoadedRecords out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // freeform comment
      std::size_t a = 0, b = eq;
      while (a < b && std::isspace(static_cast<unsigned char>(body[a]))) ++a;
      while (b > a && std::isspace(static_cast<unsigned char>(body[b - 1]))) --b;
      std::string key = body.substr(a, b - a);
      std::string value = body.substr(eq + 1);
      std::size_t va = 0, vb = value.size();
      while (va < vb && std::isspace(static_cast<unsigned char>(value[va]))) ++va;
      while (vb > va && std::isspace(static_cast<unsigned char>(value[vb - 1]))) --vb;
      set_key(out.config, key, value.substr(va, vb - va));
      continue;
    }

    char kind = 0;
    long long t = 0;
    char extra = 0;
    int n = std::sscanf(line.c_str(), "%lld %c %c", &t, &kind, &extra);
    if (n != 2 || (kind != 'D' && kind != 'S'))
      throw IoError(path + ": line " + std::to_string(line_no) +
                    ": expected '<time_ps> <D|S>'");
    out.records.push_back(
        {t, kind == 'D' ? RecordKind::Detection : RecordKind::SyncPulse});
  }
  return out;
}

void write_histogram_csv(const std::string& path, const Histogram& h) {
  std::string body = "bin_start_ps,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g,%" PRIu64 "\n",
                  h.origin_ps + static_cast<double>(i) * h.bin_width_ps,
                  h.counts[i]);
    body += buf;
  }
  write_all(path, body);
}

void write_report_csv(const std::string& path, const CalibrationReport& rep,
                      const Config& cfg) {
  std::string body =
      "temperature_K,v_ex_V,pde,pde_err,dcr_cps,dcr_err,p_ap,p_ap_err,"
      "fwhm_ps,counts_total,seed\n";
  body += csv_double(cfg.sim.operating.temperature);
  body += ',';
  body += csv_double(cfg.sim.operating.v_ex);
  body += ',';
  body += csv_double(rep.pde.value);
  body += ',';
  body += csv_double(rep.pde.err);
  body += ',';
  body += csv_double(rep.dcr_cps.value);
  body += ',';
  body += csv_double(rep.dcr_cps.err);
  body += ',';
  body += csv_double(rep.p_ap.value);
  body += ',';
  body += csv_double(rep.p_ap.err);
  body += ',';
  if (rep.fwhm_valid) body += csv_double(rep.fwhm_ps);
  body += ',';
  body += std::to_string(rep.counts_total);
  body += ',';
  body += std::to_string(cfg.sim.seed);
  body += '\n';
  write_all(path, body);
}

void write_waveform(const std::string& path,
                    std::span<const WaveformPoint> points) {
  std::string body = "time_ps voltage_v\n";
  for (const auto& p : points) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f %.3f\n", p.time_ps, p.volts);
    body += buf;
  }
  write_all(path, body);
}

}  // namespace spdsim
