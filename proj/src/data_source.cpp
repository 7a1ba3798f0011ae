#include "vkg/data_source.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <thread>

#include "vkg/archive.hpp"

namespace vkg {
namespace {

constexpr std::string_view kPlaceholder = "{date}";

std::size_t count_placeholders(std::string_view s) {
  std::size_t n = 0;
  for (auto pos = s.find(kPlaceholder); pos != std::string_view::npos;
       pos = s.find(kPlaceholder, pos + kPlaceholder.size()))
    ++n;
  return n;
}

std::string substitute(std::string_view tmpl, const std::string& date) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = tmpl.find(kPlaceholder, pos);
    if (hit == std::string_view::npos) {
      out += tmpl.substr(pos);
      return out;
    }
    out += tmpl.substr(pos, hit - pos);
    out += date;
    pos = hit + kPlaceholder.size();
  }
}

std::string unique_suffix() {
  static std::atomic<unsigned> counter{0};
  const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  return std::to_string(tid % 100000) + "." + std::to_string(counter++);
}

// Moves `raw` to `final_path`, expanding it when it is an archive.
void install(const std::filesystem::path& raw, const std::filesystem::path& final_path) {
  const auto tmp = final_path.parent_path() / ("." + final_path.filename().string() + ".tmp." +
                                               unique_suffix());
  switch (detect_archive(raw)) {
    case ArchiveKind::gzip: gunzip_file(raw, tmp); break;
    case ArchiveKind::zip: unzip_first_delimited(raw, tmp); break;
    case ArchiveKind::none: std::filesystem::copy_file(raw, tmp); break;
  }
  std::filesystem::rename(tmp, final_path);
}

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

void download(const std::string& url, const std::filesystem::path& dest, const FetchOptions& opts) {
  const auto [base, path] = split_url(url);
  httplib::Client cli(base);
  cli.set_follow_location(true);
  cli.set_connection_timeout(opts.connect_timeout_s, 0);
  cli.set_read_timeout(opts.read_timeout_s, 0);

  std::ofstream os(dest, std::ios::binary | std::ios::trunc);
  if (!os) throw FetchFailure("cannot write " + dest.string());
  int status = 0;
  auto res = cli.Get(
      path,
      [&](const httplib::Response& r) {
        status = r.status;
        return r.status == 200;
      },
      [&](const char* data, std::size_t len) {
        os.write(data, static_cast<std::streamsize>(len));
        return static_cast<bool>(os);
      });
  os.close();
  if (status != 0 && status != 200) throw FetchFailure("HTTP status " + std::to_string(status));
  if (!res) throw FetchFailure("network error: " + httplib::to_string(res.error()));
  if (res->status != 200) throw FetchFailure("HTTP status " + std::to_string(res->status));
}

}  // namespace

bool TimeWindow::contains(Timestamp t) const {
  const auto s = seconds_of_day(t);
  if (start_s <= end_s) return s >= start_s && s < end_s;
  return s >= start_s || s < end_s;
}

std::optional<std::int64_t> parse_time_of_day(std::string_view s) {
  int h = 0, m = 0, sec = 0;
  auto rd = [&](std::size_t pos, int& out) {
    if (pos + 2 > s.size()) return false;
    const auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + 2, out);
    return ec == std::errc{} && p == s.data() + pos + 2;
  };
  if (s.size() != 5 && s.size() != 8) return std::nullopt;
  if (!rd(0, h) || s[2] != ':' || !rd(3, m)) return std::nullopt;
  if (s.size() == 8 && (s[5] != ':' || !rd(6, sec))) return std::nullopt;
  if (m > 59 || sec > 59 || h > 24 || (h == 24 && (m || sec))) return std::nullopt;
  return h * 3600 + m * 60 + sec;
}

std::string format_time_of_day(std::int64_t seconds) {
  char buf[64];
  const auto h = seconds / 3600, m = (seconds % 3600) / 60, s = seconds % 60;
  if (s) std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(h),
                       static_cast<long long>(m), static_cast<long long>(s));
  else std::snprintf(buf, sizeof buf, "%02lld:%02lld", static_cast<long long>(h),
                     static_cast<long long>(m));
  return buf;
}

bool is_remote_location(std::string_view s) {
  return s.starts_with("http://") || s.starts_with("https://");
}

std::vector<SourceEntry> resolve(const SourceConfig& cfg) {
  using namespace std::chrono;
  if (!cfg.date_from.ok() || !cfg.date_to.ok()) throw InvalidSourceConfig("invalid date");
  if (sys_days{cfg.date_from} > sys_days{cfg.date_to})
    throw InvalidSourceConfig("date_from is after date_to");
  if (cfg.url_template.empty()) throw InvalidTemplate("empty url_template");

  const bool remote = is_remote_location(cfg.url_template);
  const auto placeholders = count_placeholders(cfg.url_template);
  if (remote && placeholders != 1)
    throw InvalidTemplate("remote url_template needs exactly one {date} placeholder");

  std::vector<SourceEntry> out;
  for (sys_days d = sys_days{cfg.date_from}; d <= sys_days{cfg.date_to}; d += days{1}) {
    const Date date{d};
    const auto ds = format_date(date);
    SourceEntry e{date, {}, remote};
    if (placeholders > 0) e.location = substitute(cfg.url_template, ds);
    else e.location = (std::filesystem::path(cfg.url_template) / (ds + ".csv")).string();
    out.push_back(std::move(e));
  }
  return out;
}

std::filesystem::path cache_path(const std::filesystem::path& cache_dir,
                                 const std::string& source_name, Date date) {
  return cache_dir / source_name / (format_date(date) + ".csv");
}

std::filesystem::path fetch(const SourceEntry& entry, const std::filesystem::path& cache_dir,
                            const std::string& source_name, const FetchOptions& opts) {
  namespace fs = std::filesystem;
  const auto target = cache_path(cache_dir, source_name, entry.date);
  std::error_code ec;
  if (fs::is_regular_file(target, ec) && fs::file_size(target, ec) > 0) return target;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw FetchFailure("cannot create cache directory: " + ec.message());

  if (entry.remote) {
    const auto raw = target.parent_path() / ("." + target.filename().string() + ".download." +
                                             unique_suffix());
    try {
      download(entry.location, raw, opts);
      install(raw, target);
    } catch (const ArchiveError& e) {
      fs::remove(raw, ec);
      throw FetchFailure(e.what());
    } catch (...) {
      fs::remove(raw, ec);
      throw;
    }
    fs::remove(raw, ec);
    return target;
  }

  fs::path source = entry.location;
  if (!fs::is_regular_file(source, ec)) {
    // Directory sources: any file whose name carries the date, e.g. aisdk-2024-03-01.zip.
    const auto dir = source.parent_path();
    const auto ds = format_date(entry.date);
    std::vector<fs::path> candidates;
    if (fs::is_directory(dir, ec))
      for (const auto& de : fs::directory_iterator(dir, ec))
        if (de.is_regular_file() && de.path().filename().string().find(ds) != std::string::npos)
          candidates.push_back(de.path());
    if (candidates.empty()) throw FetchFailure("no local file for " + ds + " in " + dir.string());
    std::sort(candidates.begin(), candidates.end());
    source = candidates.front();
  }
  try {
    install(source, target);
  } catch (const ArchiveError& e) {
    throw FetchFailure(e.what());
  } catch (const fs::filesystem_error& e) {
    throw FetchFailure(e.what());
  }
  return target;
}

std::vector<AisRecord> filter_time_window(std::vector<AisRecord> records, const TimeWindow& w) {
  std::erase_if(records, [&](const AisRecord& r) { return !w.contains(r.timestamp); });
  return records;
}

}  // namespace vkg
