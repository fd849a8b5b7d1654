#include "dynunc/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dynunc::io {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trimmed(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trimmed(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trimmed(cur));
  return fields;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << path.string() << ":" << line_no << ": cannot parse number '" << s << "'";
    throw IoError(msg.str());
  }
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                  std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trimmed(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (first && header) {
      *header = fields;
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat read_matrix_csv(const std::filesystem::path& path) {
  const auto rows = read_numeric_csv(path, nullptr);
  if (rows.empty()) throw IoError(path.string() + ": empty matrix file");
  const std::size_t cols = rows[0].size();
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw IoError(path.string() + ": ragged matrix rows");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << fmt17(m(i, j));
    }
    out << '\n';
  }
}

void require_header(const std::vector<std::string>& header,
                    const std::vector<std::string>& expected_prefix,
                    const std::filesystem::path& path) {
  if (header.size() < expected_prefix.size())
    throw IoError(path.string() + ": missing columns in header");
  for (std::size_t i = 0; i < expected_prefix.size(); ++i) {
    if (header[i] != expected_prefix[i])
      throw IoError(path.string() + ": expected header column '" + expected_prefix[i] +
                    "', found '" + header[i] + "'");
  }
}

}  // namespace

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::filesystem::path cov_sidecar(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p.replace_extension();
  p += ".cov.csv";
  return p;
}

TimeSeriesU read_timeseries_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(path, &header);
  require_header(header, {"t", "value"}, path);
  const bool has_unc = header.size() >= 3 && header[2] == "unc";
  if (rows.size() < 2) throw IoError(path.string() + ": need at least two samples");

  TimeSeriesU x;
  const Index n = static_cast<Index>(rows.size());
  x.values = Vec(n);
  Vec unc(n);
  x.t0 = rows[0][0];
  const double dt = rows[1][0] - rows[0][0];
  if (!(dt > 0.0)) throw IoError(path.string() + ": time column must increase");
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (row.size() < (has_unc ? 3u : 2u)) throw IoError(path.string() + ": short row");
    const double expect_t = x.t0 + static_cast<double>(i) * dt;
    if (std::abs(row[0] - expect_t) > 1e-9 * std::max(std::abs(expect_t), dt))
      throw IoError(path.string() + ": non-uniform time grid at row " + std::to_string(i + 1));
    x.values[i] = row[1];
    if (has_unc) unc[i] = row[2];
  }
  x.dt = dt;
  if (has_unc) x.unc = Uncertainty::pointwise(std::move(unc));

  const auto sidecar = cov_sidecar(path);
  if (std::filesystem::exists(sidecar)) {
    Mat cov = read_matrix_csv(sidecar);
    if (cov.rows() != n || cov.cols() != n)
      throw IoError(sidecar.string() + ": covariance dimension does not match the series");
    x.unc = Uncertainty::full(std::move(cov));
  }
  x.validate();
  return x;
}

void write_timeseries_csv(const std::filesystem::path& path, const TimeSeriesU& x,
                          bool with_sidecar) {
  x.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const bool has_unc = x.unc.has_value();
  out << (has_unc ? "t,value,unc\n" : "t,value\n");
  const Vec u = x.unc.pointwise_std(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    out << fmt17(x.t0 + static_cast<double>(i) * x.dt) << ',' << fmt17(x.values[i]);
    if (has_unc) out << ',' << fmt17(u[i]);
    out << '\n';
  }
  if (with_sidecar && x.unc.kind == Uncertainty::Kind::Full)
    write_matrix_csv(cov_sidecar(path), x.unc.cov);
}

SpectrumU read_spectrum_csv(const std::filesystem::path& path, bool nyquist_bin) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(path, &header);
  require_header(header, {"f", "re", "im"}, path);
  if (rows.size() < 2) throw IoError(path.string() + ": need at least two bins");
  const Index m = static_cast<Index>(rows.size());
  SpectrumU f;
  f.nyquist_bin = nyquist_bin;
  f.freqs = Vec(m);
  f.reim = Vec(2 * m);
  for (Index k = 0; k < m; ++k) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    if (row.size() < 3) throw IoError(path.string() + ": short row");
    f.freqs[k] = row[0];
    f.reim[k] = row[1];
    f.reim[m + k] = row[2];
  }
  const auto sidecar = cov_sidecar(path);
  if (std::filesystem::exists(sidecar)) {
    Mat cov = read_matrix_csv(sidecar);
    if (cov.rows() != 2 * m || cov.cols() != 2 * m)
      throw IoError(sidecar.string() + ": covariance must be 2M x 2M");
    f.cov = std::move(cov);
  }
  f.validate();
  return f;
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumU& f,
                        bool with_sidecar) {
  f.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "f,re,im,unc_re,unc_im\n";
  const Index m = f.bins();
  for (Index k = 0; k < m; ++k) {
    const double ur = f.has_cov() ? std::sqrt(std::max(0.0, f.cov(k, k))) : 0.0;
    const double ui = f.has_cov() ? std::sqrt(std::max(0.0, f.cov(m + k, m + k))) : 0.0;
    out << fmt17(f.freqs[k]) << ',' << fmt17(f.re(k)) << ',' << fmt17(f.im(k)) << ','
        << fmt17(ur) << ',' << fmt17(ui) << '\n';
  }
  if (with_sidecar && f.has_cov()) write_matrix_csv(cov_sidecar(path), f.cov);
}

design::FreqRespData read_freqresp_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_numeric_csv(path, &header);
  require_header(header, {"f", "re", "im"}, path);
  if (rows.size() < 2) throw IoError(path.string() + ": need at least two points");
  const Index m = static_cast<Index>(rows.size());
  design::FreqRespData h;
  h.freqs = Vec(m);
  h.re = Vec(m);
  h.im = Vec(m);
  Vec ur(m), ui(m);
  bool has_unc = header.size() >= 5;
  for (Index k = 0; k < m; ++k) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    if (row.size() < (has_unc ? 5u : 3u)) throw IoError(path.string() + ": short row");
    h.freqs[k] = row[0];
    h.re[k] = row[1];
    h.im[k] = row[2];
    if (has_unc) {
      ur[k] = row[3];
      ui[k] = row[4];
    }
  }
  const auto sidecar = cov_sidecar(path);
  if (std::filesystem::exists(sidecar)) {
    Mat cov = read_matrix_csv(sidecar);
    if (cov.rows() != 2 * m || cov.cols() != 2 * m)
      throw IoError(sidecar.string() + ": covariance must be 2M x 2M");
    h.cov = std::move(cov);
  } else if (has_unc) {
    Vec diag(2 * m);
    diag.head(m) = ur.array().square().matrix();
    diag.tail(m) = ui.array().square().matrix();
    h.cov = diag.asDiagonal();
  }
  h.validate();
  return h;
}

void write_freqresp_csv(const std::filesystem::path& path, const design::FreqRespData& h,
                        bool with_sidecar) {
  h.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "f,re,im,unc_re,unc_im\n";
  const Index m = h.size();
  for (Index k = 0; k < m; ++k) {
    const double ur = h.has_cov() ? std::sqrt(std::max(0.0, h.cov(k, k))) : 0.0;
    const double ui = h.has_cov() ? std::sqrt(std::max(0.0, h.cov(m + k, m + k))) : 0.0;
    out << fmt17(h.freqs[k]) << ',' << fmt17(h.re[k]) << ',' << fmt17(h.im[k]) << ','
        << fmt17(ur) << ',' << fmt17(ui) << '\n';
  }
  if (with_sidecar && h.has_cov()) write_matrix_csv(cov_sidecar(path), h.cov);
}

filt::DigitalFilterU read_filter_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  filt::DigitalFilterU flt;
  try {
    const auto b = j.at("b").get<std::vector<double>>();
    flt.b = Eigen::Map<const Vec>(b.data(), static_cast<Index>(b.size()));
    const auto a = j.at("a").get<std::vector<double>>();
    flt.a = Eigen::Map<const Vec>(a.data(), static_cast<Index>(a.size()));
    flt.delay_n0 = j.value("delay_n0", 0);
    if (j.contains("cov") && !j.at("cov").is_null()) {
      const auto rows = j.at("cov").get<std::vector<std::vector<double>>>();
      Mat cov(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw IoError(path.string() + ": ragged covariance");
        for (std::size_t k = 0; k < rows[i].size(); ++k)
          cov(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
      }
      flt.cov = std::move(cov);
    }
  } catch (const ordered_json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  flt.validate();
  return flt;
}

void write_filter_json(const std::filesystem::path& path, const filt::DigitalFilterU& flt) {
  flt.validate();
  ordered_json j;
  j["b"] = std::vector<double>(flt.b.data(), flt.b.data() + flt.b.size());
  j["a"] = std::vector<double>(flt.a.data(), flt.a.data() + flt.a.size());
  j["delay_n0"] = flt.delay_n0;
  if (flt.has_cov()) {
    std::vector<std::vector<double>> cov(flt.cov.rows());
    for (Index i = 0; i < flt.cov.rows(); ++i)
      cov[static_cast<std::size_t>(i)] =
          std::vector<double>(flt.cov.row(i).begin(), flt.cov.row(i).end());
    j["cov"] = cov;
  } else {
    j["cov"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trimmed(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw IoError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      section = trimmed(line.substr(1, line.size() - 2));
      if (section.empty())
        throw IoError(origin + ":" + std::to_string(line_no) + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty())
      throw IoError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (section.empty())
      throw IoError(origin + ":" + std::to_string(line_no) + ": key outside any section");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

bool Config::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    throw IoError(origin_ + ": missing required key [" + section + "] " + key);
  return s->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? sections_.at(section).at(key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string v = get_string(section, key);
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw IoError(origin_ + ": [" + section + "] " + key + " is not a number: '" + v + "'");
  }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_long(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key);
  try {
    return std::stol(v);
  } catch (const std::exception&) {
    throw IoError(origin_ + ": [" + section + "] " + key + " is not an integer: '" + v + "'");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_string(section, key);
  for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw IoError(origin_ + ": [" + section + "] " + key + " is not a boolean: '" + v + "'");
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

// ---------------------------------------------------------------------------
// Result bundles
// ---------------------------------------------------------------------------

void Artifacts::note(const std::string& key, double value) { report.emplace_back(key, fmt17(value)); }

void Artifacts::note(const std::string& key, const std::string& value) {
  report.emplace_back(key, value);
}

std::vector<std::filesystem::path> write_results(const std::filesystem::path& dir,
                                                 const Artifacts& artifacts) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());

  std::vector<std::filesystem::path> written;
  auto add = [&](const std::filesystem::path& p) { written.push_back(p); };

  if (artifacts.estimate) {
    const auto p = dir / "estimate.csv";
    write_timeseries_csv(p, *artifacts.estimate, /*with_sidecar=*/false);
    add(p);
  }
  if (artifacts.spectrum) {
    const auto p = dir / "spectrum.csv";
    write_spectrum_csv(p, *artifacts.spectrum, /*with_sidecar=*/false);
    add(p);
  }
  if (artifacts.filter) {
    const auto p = dir / "filter.json";
    write_filter_json(p, *artifacts.filter);
    add(p);
  }
  for (const auto& [name, series] : artifacts.extra_series) {
    const auto p = dir / (name + ".csv");
    write_timeseries_csv(p, series, /*with_sidecar=*/false);
    add(p);
  }

  const auto rp = dir / "report.txt";
  std::ofstream out(rp);
  if (!out) throw IoError("cannot write " + rp.string());
  for (const auto& [key, value] : artifacts.report) out << key << " = " << value << '\n';
  if (!artifacts.warnings.empty()) {
    out << '\n';
    for (const auto& w : artifacts.warnings) out << "warning: " << w << '\n';
  }
  add(rp);
  return written;
}

}  // namespace dynunc::io
