#include "charl/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace charl {

namespace {

void check_shape(std::size_t cells, int num_variables, int num_categories, const char* what) {
    if (num_variables < 1) throw DataError(std::string(what) + ": need at least one variable");
    if (num_categories < 2) throw DataError(std::string(what) + ": need at least two categories");
    if (cells == 0 || cells % static_cast<std::size_t>(num_variables) != 0)
        throw DataError(std::string(what) + ": need at least one complete time step");
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t begin = 0;
    while (true) {
        const auto comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(begin));
            return cells;
        }
        cells.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
}

bool parse_int(std::string_view s, long long& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

CategoricalTrace::CategoricalTrace(std::vector<int> values, int num_variables, int num_categories,
                                   std::optional<std::string> label, std::string source_id,
                                   std::size_t start_time)
    : values_(std::move(values)),
      num_variables_(num_variables),
      num_categories_(num_categories),
      label_(std::move(label)),
      source_id_(std::move(source_id)),
      start_time_(start_time) {
    check_shape(values_.size(), num_variables_, num_categories_, "categorical trace");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] < 0 || values_[i] >= num_categories_) {
            throw DataError("categorical trace: category " + std::to_string(values_[i]) + " at step " +
                            std::to_string(i / static_cast<std::size_t>(num_variables_)) +
                            " outside [0, " + std::to_string(num_categories_) + ")");
        }
    }
}

CategoricalTrace CategoricalTrace::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > length()) throw DataError("categorical trace: invalid slice bounds");
    const auto d = static_cast<std::size_t>(num_variables_);
    std::vector<int> part(values_.begin() + static_cast<std::ptrdiff_t>(begin * d),
                          values_.begin() + static_cast<std::ptrdiff_t>(end * d));
    return CategoricalTrace(std::move(part), num_variables_, num_categories_, label_, source_id_,
                            start_time_ + begin);
}

BinaryTrace::BinaryTrace(std::vector<std::uint8_t> indicators, int num_variables, int num_categories,
                         std::optional<std::string> label, std::string source_id, std::size_t start_time)
    : indicators_(std::move(indicators)),
      num_variables_(num_variables),
      num_categories_(num_categories),
      label_(std::move(label)),
      source_id_(std::move(source_id)),
      start_time_(start_time) {
    check_shape(indicators_.size(), num_variables_ * num_categories_, num_categories_, "binary trace");
    const std::size_t k = static_cast<std::size_t>(num_categories_);
    for (std::size_t block = 0; block < indicators_.size(); block += k) {
        int ones = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (indicators_[block + c] > 1) throw DataError("binary trace: indicator outside {0,1}");
            ones += indicators_[block + c];
        }
        if (ones != 1) {
            throw DataError("binary trace: variable block at step " + std::to_string(block / width()) +
                            " is not one-hot");
        }
    }
}

std::vector<Proposition> BinaryTrace::propositions() const {
    std::vector<Proposition> out;
    out.reserve(width());
    for (int v = 0; v < num_variables_; ++v)
        for (int c = 0; c < num_categories_; ++c) out.push_back({v, c});
    return out;
}

Segment::Segment(std::shared_ptr<const BinaryTrace> trace, std::size_t offset, std::size_t length,
                 std::string label, std::shared_ptr<AccessProbe> probe)
    : trace_(std::move(trace)),
      offset_(offset),
      length_(length),
      label_(std::move(label)),
      probe_(std::move(probe)) {
    if (!trace_) throw DataError("segment: null trace");
    if (length_ == 0 || offset_ + length_ > trace_->length())
        throw DataError("segment: window exceeds trace bounds");
}

SegmentView Segment::view() const {
    if (probe_) probe_->reads.fetch_add(1, std::memory_order_relaxed);
    return {trace_->indicators().data() + offset_ * trace_->width(), length_, trace_->width(),
            trace_->num_categories()};
}

Segment Segment::with_probe(std::shared_ptr<AccessProbe> probe) const {
    return Segment(trace_, offset_, length_, label_, std::move(probe));
}

void LabeledDataset::validate() const {
    if (segments.empty()) return;
    const std::size_t length = segments.front().length();
    for (const auto& s : segments) {
        if (std::find(activities.begin(), activities.end(), s.label()) == activities.end())
            throw DataError("dataset: segment label '" + s.label() + "' is not a known activity");
        if (s.length() != length) throw DataError("dataset: segment lengths are not uniform");
    }
}

std::vector<const Segment*> LabeledDataset::segments_of(const std::string& activity) const {
    std::vector<const Segment*> out;
    for (const auto& s : segments)
        if (s.label() == activity) out.push_back(&s);
    return out;
}

std::size_t LabeledDataset::activity_index(const std::string& activity) const {
    const auto it = std::find(activities.begin(), activities.end(), activity);
    if (it == activities.end()) throw DataError("dataset: unknown activity '" + activity + "'");
    return static_cast<std::size_t>(it - activities.begin());
}

CategoricalTrace read_trace(std::istream& in, int num_categories, const std::string& source_id) {
    const auto error = [&](std::size_t line_no, const std::string& msg) {
        return DataError(source_id + ":" + std::to_string(line_no) + ": " + msg);
    };
    std::string line;
    if (!std::getline(in, line)) throw error(1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    if (header.size() < 2 || header[0] != "t") throw error(1, "header must start with 't,z0'");
    const bool has_label = header.back() == "label";
    const std::size_t d = header.size() - 1 - (has_label ? 1 : 0);
    if (d == 0) throw error(1, "header declares no latent variables");
    for (std::size_t v = 0; v < d; ++v) {
        if (header[v + 1] != "z" + std::to_string(v))
            throw error(1, "expected column 'z" + std::to_string(v) + "', found '" +
                               std::string(header[v + 1]) + "'");
    }

    std::vector<int> values;
    std::optional<std::string> label;
    std::size_t line_no = 1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw error(line_no, "empty row");
        }
        const auto cells = split_commas(line);
        if (cells.size() != header.size())
            throw error(line_no, "expected " + std::to_string(header.size()) + " cells, found " +
                                     std::to_string(cells.size()));
        long long t = 0;
        if (!parse_int(cells[0], t) || t != static_cast<long long>(row))
            throw error(line_no, "time index must be " + std::to_string(row));
        for (std::size_t v = 0; v < d; ++v) {
            long long c = 0;
            if (!parse_int(cells[v + 1], c)) throw error(line_no, "non-integer cell '" + std::string(cells[v + 1]) + "'");
            if (c < 0 || c >= num_categories)
                throw error(line_no, "category " + std::to_string(c) + " outside [0, " +
                                         std::to_string(num_categories) + ")");
            values.push_back(static_cast<int>(c));
        }
        if (has_label) {
            std::string cell(cells.back());
            if (!label) {
                label = cell;
            } else if (*label != cell) {
                throw error(line_no, "inconsistent label '" + cell + "' (expected '" + *label + "')");
            }
        }
        ++row;
    }
    if (row == 0) throw error(line_no, "no data rows");
    return CategoricalTrace(std::move(values), static_cast<int>(d), num_categories, std::move(label),
                            source_id);
}

CategoricalTrace load_trace(const std::filesystem::path& path, int num_categories) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open trace file " + path.string());
    return read_trace(in, num_categories, path.stem().string());
}

void write_trace(const CategoricalTrace& trace, std::ostream& out) {
    out << "t";
    for (int v = 0; v < trace.num_variables(); ++v) out << ",z" << v;
    if (trace.label()) out << ",label";
    out << "\n";
    for (std::size_t t = 0; t < trace.length(); ++t) {
        out << t;
        for (int c : trace.row(t)) out << "," << c;
        if (trace.label()) out << "," << *trace.label();
        out << "\n";
    }
}

std::vector<CategoricalTrace> load_trace_dir(const std::filesystem::path& dir, int num_categories) {
    if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .csv trace files in " + dir.string());
    std::vector<CategoricalTrace> out;
    for (const auto& f : files) out.push_back(load_trace(f, num_categories));
    return out;
}

BinaryTrace to_one_hot(const CategoricalTrace& trace) {
    const std::size_t k = static_cast<std::size_t>(trace.num_categories());
    const std::size_t d = static_cast<std::size_t>(trace.num_variables());
    std::vector<std::uint8_t> bits(trace.length() * d * k, 0);
    for (std::size_t t = 0; t < trace.length(); ++t)
        for (std::size_t v = 0; v < d; ++v)
            bits[(t * d + v) * k + static_cast<std::size_t>(trace.at(t, static_cast<int>(v)))] = 1;
    return BinaryTrace(std::move(bits), trace.num_variables(), trace.num_categories(), trace.label(),
                       trace.source_id(), trace.start_time());
}

std::vector<Segment> segment(std::shared_ptr<const BinaryTrace> trace, std::size_t length,
                             std::size_t hop) {
    if (!trace) throw DataError("segment: null trace");
    if (hop == 0) throw DataError("segment: hop must be positive");
    if (length == 0 || length > trace->length()) {
        throw DataError("segment: length " + std::to_string(length) + " yields no segment on trace '" +
                        trace->source_id() + "' of length " + std::to_string(trace->length()));
    }
    const std::string label = trace->label().value_or(trace->source_id());
    std::vector<Segment> out;
    out.reserve((trace->length() - length) / hop + 1);
    for (std::size_t start = 0; start + length <= trace->length(); start += hop)
        out.emplace_back(trace, start, length, label);
    return out;
}

std::string activity_of(const CategoricalTrace& trace) { return trace.label().value_or(trace.source_id()); }

TrainTestTraces chrono_split(const std::vector<CategoricalTrace>& traces, double train_fraction,
                             std::size_t min_test_steps) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0, 1)");
    TrainTestTraces out;
    for (const auto& trace : traces) {
        const auto boundary =
            static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(trace.length())));
        const std::size_t test_steps = trace.length() - boundary;
        if (boundary == 0 || test_steps < std::max<std::size_t>(min_test_steps, 1)) {
            throw DataError("activity '" + activity_of(trace) + "' has too few steps (" +
                            std::to_string(trace.length()) + ") for a chronological split");
        }
        out.train.push_back(trace.slice(0, boundary));
        out.test.push_back(trace.slice(boundary, trace.length()));
    }
    return out;
}

LabeledDataset build_dataset(const std::vector<CategoricalTrace>& traces, std::size_t length,
                             std::size_t hop) {
    LabeledDataset ds;
    for (const auto& trace : traces) {
        const std::string activity = activity_of(trace);
        if (std::find(ds.activities.begin(), ds.activities.end(), activity) == ds.activities.end())
            ds.activities.push_back(activity);
        auto binary = std::make_shared<const BinaryTrace>(to_one_hot(trace));
        for (auto& s : segment(binary, length, hop))
            ds.segments.emplace_back(s.trace(), s.offset(), s.length(), activity);
    }
    ds.validate();
    return ds;
}

}  // namespace charl
