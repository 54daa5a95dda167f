#include "stf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stf/errors.hpp"
#include "stf/rng.hpp"

namespace stf {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool parse_timestamp(const std::string& text, std::int64_t& out) {
    // Epoch seconds.
    {
        char* end = nullptr;
        const long long v = std::strtoll(text.c_str(), &end, 10);
        if (end && *end == '\0' && end != text.c_str()) {
            out = v;
            return true;
        }
    }
    // ISO-8601 date or date-time, 'T' or space separated, optional 'Z'.
    int y, mo, d, h = 0, mi = 0, s = 0;
    char sep;
    int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n == 3) {
        out = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400;
        return true;
    }
    if (n >= 6 && (sep == 'T' || sep == ' ')) {
        out = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
              h * 3600 + mi * 60 + s;
        return true;
    }
    return false;
}

std::string format_timestamp(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    std::int64_t rem = ts % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u %02lld:%02lld:%02lld",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

SeriesTable ingest_csv(const std::string& path, IngestReport* report) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    std::vector<std::string> header = split_line(line);
    if (header.size() < 2) throw DataError(path + ": header must name a timestamp and >= 1 channel");

    SeriesTable table;
    for (std::size_t i = 1; i < header.size(); ++i) table.channel_names.push_back(trimmed(header[i]));
    const std::size_t n = table.channel_names.size();

    std::vector<double> flat;
    std::vector<bool> missing_flags;
    std::size_t row_no = 1;  // header was row 1
    while (std::getline(in, line)) {
        ++row_no;
        if (trimmed(line).empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != n + 1) {
            throw DataError(path + ": row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(n + 1));
        }
        std::int64_t ts;
        if (!parse_timestamp(trimmed(cells[0]), ts)) {
            throw DataError(path + ": row " + std::to_string(row_no) + " has unparseable timestamp '" +
                            cells[0] + "'");
        }
        if (!table.timestamps.empty() && ts <= table.timestamps.back()) {
            throw DataError(path + ": row " + std::to_string(row_no) +
                            " timestamp is not strictly increasing");
        }
        table.timestamps.push_back(ts);
        for (std::size_t c = 0; c < n; ++c) {
            const std::string cell = trimmed(cells[c + 1]);
            if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") {
                flat.push_back(0.0);
                missing_flags.push_back(true);
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || std::isnan(v)) {
                throw DataError(path + ": row " + std::to_string(row_no) +
                                " has unparseable value '" + cell + "'");
            }
            flat.push_back(v);
            missing_flags.push_back(false);
        }
    }

    const std::size_t t = table.timestamps.size();
    if (t == 0) throw DataError(path + ": no data rows");

    // Forward fill per channel; zero fill where there is no earlier value.
    IngestReport local;
    for (std::size_t c = 0; c < n; ++c) {
        bool have_prev = false;
        double prev = 0.0;
        for (std::size_t r = 0; r < t; ++r) {
            const std::size_t i = r * n + c;
            if (missing_flags[i]) {
                if (have_prev) {
                    flat[i] = prev;
                    ++local.filled_forward;
                } else {
                    flat[i] = 0.0;
                    ++local.filled_zero;
                }
            } else {
                prev = flat[i];
                have_prev = true;
            }
        }
    }
    if (report) *report = local;

    if (t >= 2) {
        const std::int64_t stride = table.timestamps[1] - table.timestamps[0];
        for (std::size_t r = 2; r < t; ++r) {
            if (table.timestamps[r] - table.timestamps[r - 1] != stride) {
                throw DataError(path + ": row " + std::to_string(r + 2) +
                                " breaks the constant timestamp stride");
            }
        }
        table.interval_seconds = stride;
    }
    table.values = Tensor(Shape{t, n}, std::move(flat));
    return table;
}

void write_csv(const SeriesTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "timestamp";
    for (const std::string& name : table.channel_names) out << "," << name;
    out << "\n";
    char buf[40];
    for (std::size_t r = 0; r < table.steps(); ++r) {
        out << format_timestamp(table.timestamps[r]);
        for (std::size_t c = 0; c < table.channels(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", table.values[r * table.channels() + c]);
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("failed while writing " + path);
}

SeriesTable downsample(const SeriesTable& table, std::size_t factor, DownsampleAgg agg,
                       std::vector<std::string>* warnings) {
    if (factor < 1) throw ConfigError("downsample factor must be >= 1");
    if (factor == 1) return table;
    const std::size_t t = table.steps(), n = table.channels();
    const std::size_t t_out = t / factor;
    if (t % factor != 0 && warnings) {
        warnings->push_back("downsample: dropping trailing " + std::to_string(t % factor) +
                            " step(s) not filling a full group");
    }
    SeriesTable out;
    out.channel_names = table.channel_names;
    out.interval_seconds = table.interval_seconds * static_cast<std::int64_t>(factor);
    out.timestamps.reserve(t_out);
    std::vector<double> flat(t_out * n, 0.0);
    for (std::size_t g = 0; g < t_out; ++g) {
        out.timestamps.push_back(table.timestamps[g * factor]);
        for (std::size_t c = 0; c < n; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < factor; ++j) acc += table.values[(g * factor + j) * n + c];
            flat[g * n + c] = agg == DownsampleAgg::kMean ? acc / static_cast<double>(factor) : acc;
        }
    }
    out.values = Tensor(Shape{t_out, n}, std::move(flat));
    return out;
}

namespace {

SeriesTable slice_table(const SeriesTable& table, std::size_t begin, std::size_t end) {
    SeriesTable out;
    out.channel_names = table.channel_names;
    out.interval_seconds = table.interval_seconds;
    out.timestamps.assign(table.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          table.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    out.values = table.values.sliced(0, begin, end);
    return out;
}

}  // namespace

SplitTables split_622(const SeriesTable& table) {
    const std::size_t t = table.steps();
    if (t < 10) throw DataError("split_622 requires at least 10 steps, got " + std::to_string(t));
    const std::size_t b1 = static_cast<std::size_t>(std::floor(0.6 * static_cast<double>(t)));
    const std::size_t b2 = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(t)));
    return SplitTables{slice_table(table, 0, b1), slice_table(table, b1, b2),
                       slice_table(table, b2, t)};
}

std::string to_string(Partition p) {
    switch (p) {
        case Partition::kTrain: return "train";
        case Partition::kVal: return "val";
        case Partition::kTest: return "test";
    }
    return "?";
}

WindowedDataset::WindowedDataset(Partition partition, const SeriesTable& table, std::size_t t_in,
                                 std::size_t t_out, std::size_t stride,
                                 std::vector<std::string>* warnings)
    : partition_(partition),
      source_(std::make_shared<Tensor>(table.values)),
      channels_(table.channels()),
      t_in_(t_in),
      t_out_(t_out) {
    if (t_in < 1 || t_out < 1) throw ConfigError("window lengths must be >= 1");
    if (stride < 1) throw ConfigError("window stride must be >= 1");
    const std::size_t l = table.steps();
    if (l < t_in + t_out) {
        if (warnings) {
            warnings->push_back(to_string(partition) + " partition too short for windows (" +
                                std::to_string(l) + " < " + std::to_string(t_in + t_out) + ")");
        }
        return;
    }
    const std::size_t count = (l - t_in - t_out) / stride + 1;
    origins_.reserve(count);
    for (std::size_t i = 0; i < count; ++i) origins_.push_back(i * stride);
}

namespace {

// Channel-major copy of source[start, start+len) x all channels.
Tensor window_slice(const Tensor& source, std::size_t start, std::size_t len, std::size_t n) {
    Tensor out(Shape{n, len});
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t t = 0; t < len; ++t) out[c * len + t] = source[(start + t) * n + c];
    }
    return out;
}

}  // namespace

Tensor WindowedDataset::input(std::size_t i) const {
    return window_slice(*source_, origins_.at(i), t_in_, channels_);
}

Tensor WindowedDataset::target(std::size_t i) const {
    return window_slice(*source_, origins_.at(i) + t_in_, t_out_, channels_);
}

std::string to_string(TrendKind kind) {
    switch (kind) {
        case TrendKind::kNone: return "none";
        case TrendKind::kLinear: return "linear";
        case TrendKind::kPhaseDependent: return "phase_dependent";
    }
    return "?";
}

TrendKind trend_kind_from_string(const std::string& s) {
    if (s == "none") return TrendKind::kNone;
    if (s == "linear") return TrendKind::kLinear;
    if (s == "phase_dependent") return TrendKind::kPhaseDependent;
    throw ConfigError("unknown trend kind: " + s);
}

SeriesTable gen_synthetic(const SyntheticSpec& spec) {
    const std::size_t w = spec.period_profile.size();
    if (spec.period_profile.rank() != 1 || w < 2) {
        throw ConfigError("synthetic period profile must be a vector of length >= 2");
    }
    if (spec.length < 4 * w) {
        throw ConfigError("synthetic length must be >= 4 periods (" + std::to_string(4 * w) + ")");
    }
    if (spec.channels < 1) throw ConfigError("synthetic channels must be >= 1");

    SeriesTable table;
    table.interval_seconds = spec.interval_seconds;
    table.timestamps.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        table.timestamps.push_back(spec.start_timestamp +
                                   static_cast<std::int64_t>(t) * spec.interval_seconds);
    }
    for (std::size_t c = 0; c < spec.channels; ++c) {
        table.channel_names.push_back("ch" + std::to_string(c));
    }

    Rng root(spec.seed);
    std::vector<double> flat(spec.length * spec.channels, 0.0);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        Rng noise = root.substream("noise/" + std::to_string(c));
        for (std::size_t t = 0; t < spec.length; ++t) {
            const std::size_t phase = t % w;
            const std::size_t period = t / w;
            double v = spec.period_profile[phase];
            switch (spec.trend_kind) {
                case TrendKind::kNone:
                    break;
                case TrendKind::kLinear:
                    v += spec.trend_magnitude * static_cast<double>(t);
                    break;
                case TrendKind::kPhaseDependent: {
                    const double rate = spec.phase_rate_base *
                                        (1.0 + static_cast<double>(phase) / static_cast<double>(w));
                    v += spec.trend_magnitude *
                         std::sin(2.0 * M_PI * rate * static_cast<double>(period));
                    break;
                }
            }
            if (spec.noise_std > 0.0) v += spec.noise_std * noise.normal();
            flat[t * spec.channels + c] = v;
        }
    }
    table.values = Tensor(Shape{spec.length, spec.channels}, std::move(flat));
    return table;
}

}  // namespace stf
