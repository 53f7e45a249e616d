#pragma once

#include "charl/proposition.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace charl {

/// A T x d matrix of category indices in [0, K).
class CategoricalTrace {
public:
    CategoricalTrace(std::vector<int> values, int num_variables, int num_categories,
                     std::optional<std::string> label = std::nullopt, std::string source_id = {},
                     std::size_t start_time = 0);

    std::size_t length() const { return values_.size() / static_cast<std::size_t>(num_variables_); }
    int num_variables() const { return num_variables_; }
    int num_categories() const { return num_categories_; }
    int at(std::size_t t, int variable) const {
        return values_[t * static_cast<std::size_t>(num_variables_) + static_cast<std::size_t>(variable)];
    }
    std::span<const int> row(std::size_t t) const {
        return {values_.data() + t * static_cast<std::size_t>(num_variables_),
                static_cast<std::size_t>(num_variables_)};
    }
    std::span<const int> values() const { return values_; }
    const std::optional<std::string>& label() const { return label_; }
    const std::string& source_id() const { return source_id_; }
    /// Time index of row 0 within the originating recording.
    std::size_t start_time() const { return start_time_; }

    /// Rows [begin, end), keeping the label and source and shifting start_time.
    CategoricalTrace slice(std::size_t begin, std::size_t end) const;

    bool operator==(const CategoricalTrace&) const = default;

private:
    std::vector<int> values_;
    int num_variables_;
    int num_categories_;
    std::optional<std::string> label_;
    std::string source_id_;
    std::size_t start_time_;
};

/// T x (d*K) one-hot indicator matrix, columns ordered (variable, category) row-major.
class BinaryTrace {
public:
    BinaryTrace(std::vector<std::uint8_t> indicators, int num_variables, int num_categories,
                std::optional<std::string> label = std::nullopt, std::string source_id = {},
                std::size_t start_time = 0);

    std::size_t length() const { return indicators_.size() / width(); }
    std::size_t width() const {
        return static_cast<std::size_t>(num_variables_) * static_cast<std::size_t>(num_categories_);
    }
    int num_variables() const { return num_variables_; }
    int num_categories() const { return num_categories_; }
    bool at(std::size_t t, std::size_t column) const { return indicators_[t * width() + column] != 0; }
    std::span<const std::uint8_t> indicators() const { return indicators_; }
    std::vector<Proposition> propositions() const;
    const std::optional<std::string>& label() const { return label_; }
    const std::string& source_id() const { return source_id_; }
    std::size_t start_time() const { return start_time_; }

private:
    std::vector<std::uint8_t> indicators_;
    int num_variables_;
    int num_categories_;
    std::optional<std::string> label_;
    std::string source_id_;
    std::size_t start_time_;
};

/// Counts reads of segment contents. Attached to segments by tests that must prove a
/// stage never looked at a given partition.
struct AccessProbe {
    std::atomic<std::uint64_t> reads{0};
};

/// Read-only window over `length` consecutive rows of a BinaryTrace.
struct SegmentView {
    const std::uint8_t* data = nullptr;
    std::size_t length = 0;
    std::size_t width = 0;
    int num_categories = 0;

    bool at(std::size_t t, std::size_t column) const { return data[t * width + column] != 0; }
    bool holds(Proposition p, std::size_t t) const { return at(t, p.column(num_categories)); }
    std::span<const std::uint8_t> row(std::size_t t) const { return {data + t * width, width}; }
};

/// Fixed-length slice of a BinaryTrace with its origin and activity label.
class Segment {
public:
    Segment(std::shared_ptr<const BinaryTrace> trace, std::size_t offset, std::size_t length,
            std::string label, std::shared_ptr<AccessProbe> probe = nullptr);

    /// Contents of the segment. Every call is recorded on the attached probe, if any.
    SegmentView view() const;

    std::size_t length() const { return length_; }
    std::size_t width() const { return trace_->width(); }
    int num_variables() const { return trace_->num_variables(); }
    int num_categories() const { return trace_->num_categories(); }
    const std::string& label() const { return label_; }
    const std::string& source_id() const { return trace_->source_id(); }
    /// Offset of the first row within the underlying BinaryTrace.
    std::size_t offset() const { return offset_; }
    /// Absolute time index of the first row in the originating recording.
    std::size_t start_time() const { return trace_->start_time() + offset_; }
    const std::shared_ptr<const BinaryTrace>& trace() const { return trace_; }

    Segment with_probe(std::shared_ptr<AccessProbe> probe) const;

private:
    std::shared_ptr<const BinaryTrace> trace_;
    std::size_t offset_;
    std::size_t length_;
    std::string label_;
    std::shared_ptr<AccessProbe> probe_;
};

/// Uniform-length labelled segments plus the ordered activity set.
struct LabeledDataset {
    std::vector<Segment> segments;
    std::vector<std::string> activities;

    /// Throws DataError if a label is outside `activities` or lengths differ.
    void validate() const;
    std::vector<const Segment*> segments_of(const std::string& activity) const;
    std::size_t activity_index(const std::string& activity) const;
};

/// Reads the latent-trace CSV contract: header `t,z0,...,z{d-1}[,label]`.
CategoricalTrace load_trace(const std::filesystem::path& path, int num_categories);
CategoricalTrace read_trace(std::istream& in, int num_categories, const std::string& source_id);
void write_trace(const CategoricalTrace& trace, std::ostream& out);

/// Loads every *.csv in `dir` sorted by file name. Traces without a label column are
/// labelled with the file stem.
std::vector<CategoricalTrace> load_trace_dir(const std::filesystem::path& dir, int num_categories);

BinaryTrace to_one_hot(const CategoricalTrace& trace);

/// Segments starting at 0, hop, 2*hop, ... Throws DataError if length > T.
std::vector<Segment> segment(std::shared_ptr<const BinaryTrace> trace, std::size_t length,
                             std::size_t hop);

struct TrainTestTraces {
    std::vector<CategoricalTrace> train;
    std::vector<CategoricalTrace> test;
};

/// Per activity: the first floor(fraction * T) steps go to train, the rest to test.
/// Throws DataError naming the activity when its test part is shorter than min_test_steps.
TrainTestTraces chrono_split(const std::vector<CategoricalTrace>& traces, double train_fraction,
                             std::size_t min_test_steps = 1);

/// One-hot encodes and segments each labelled trace; activity order follows first appearance.
LabeledDataset build_dataset(const std::vector<CategoricalTrace>& traces, std::size_t length,
                             std::size_t hop);

/// Activity name of a trace: its label, or its source id when unlabelled.
std::string activity_of(const CategoricalTrace& trace);

}  // namespace charl
