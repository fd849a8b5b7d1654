#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynunc/core.hpp"
#include "dynunc/design.hpp"
#include "dynunc/filter.hpp"

namespace dynunc::io {

// ---------------------------------------------------------------------------
// CSV / JSON formats
//
// time series      t,value[,unc]       uniform t grid, optional sidecar
//                                      <stem>.cov.csv with the full matrix
// spectrum         f,re,im,unc_re,unc_im   sidecar <stem>.cov.csv for the
//                                      full 2M x 2M covariance
// frequency resp.  f,re,im[,unc_re,unc_im] sidecar as above
// filter           JSON: b, a, delay_n0, cov
//
// Values are printed with 17 significant digits so a write/read round trip
// is bit-exact.
// ---------------------------------------------------------------------------

TimeSeriesU read_timeseries_csv(const std::filesystem::path& path);
void write_timeseries_csv(const std::filesystem::path& path, const TimeSeriesU& x,
                          bool with_sidecar = true);

SpectrumU read_spectrum_csv(const std::filesystem::path& path, bool nyquist_bin = true);
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumU& f,
                        bool with_sidecar = true);

design::FreqRespData read_freqresp_csv(const std::filesystem::path& path);
void write_freqresp_csv(const std::filesystem::path& path, const design::FreqRespData& h,
                        bool with_sidecar = true);

filt::DigitalFilterU read_filter_json(const std::filesystem::path& path);
void write_filter_json(const std::filesystem::path& path, const filt::DigitalFilterU& flt);

/// Sidecar covariance path: x.csv -> x.cov.csv
std::filesystem::path cov_sidecar(const std::filesystem::path& path);

/// 17-significant-digit formatting used by every writer.
std::string fmt17(double v);

// ---------------------------------------------------------------------------
// Config files: INI-style named sections of key = value pairs, '#' and ';'
// comments.
// ---------------------------------------------------------------------------

class Config {
public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_long(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  bool has_section(const std::string& section) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  const std::string& origin() const { return origin_; }

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::string origin_;
};

// ---------------------------------------------------------------------------
// Result bundles
// ---------------------------------------------------------------------------

/// Everything a pipeline run may emit. Insertion order of report lines and
/// extra series is preserved, so output files are deterministic.
struct Artifacts {
  std::optional<TimeSeriesU> estimate;                          ///< estimate.csv
  std::optional<SpectrumU> spectrum;                            ///< spectrum.csv
  std::optional<filt::DigitalFilterU> filter;                   ///< filter.json
  std::vector<std::pair<std::string, TimeSeriesU>> extra_series;  ///< <name>.csv
  std::vector<std::pair<std::string, std::string>> report;      ///< report.txt lines
  std::vector<std::string> warnings;

  void note(const std::string& key, double value);
  void note(const std::string& key, const std::string& value);
};

/// Writes the bundle into dir (created if missing); report.txt is always
/// produced. Uncertainty lands in the pointwise columns; full covariance
/// sidecars are not emitted here (write the objects directly when the full
/// matrices are wanted). Returns the files written, in order.
std::vector<std::filesystem::path> write_results(const std::filesystem::path& dir,
                                                 const Artifacts& artifacts);

}  // namespace dynunc::io
