#include "icut/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace icut::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

double parse_double(std::string_view s) {
    s = trim(s);
    if (s == "nan" || s == "NaN") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
        throw Error("malformed number '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s) {
    s = trim(s);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty())
        throw Error("malformed integer '" + std::string(s) + "'");
    return v;
}

std::string format_csv(const CsvTable& table) {
    std::string out;
    auto put = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    put(table.header);
    for (const auto& r : table.rows) put(r);
    return out;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    bool have_header = false;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto pos = text.find('\n');
        auto line = text.substr(0, pos);
        text = pos == std::string_view::npos ? std::string_view{} : text.substr(pos + 1);
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw Error("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " + std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw Error("csv: missing header");
    return table;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write beside the target and rename, so a failed write leaves nothing behind.
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.close();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error("write failed for " + path.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string format_dataset_csv(const LabeledDataset& dataset) {
    CsvTable t;
    t.header = {"id", "y", "yhat"};
    for (std::size_t j = 0; j < dataset.dim(); ++j) t.header.push_back("f" + std::to_string(j));
    t.rows.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        std::vector<std::string> r;
        r.reserve(t.header.size());
        r.push_back(std::to_string(dataset.ids[i]));
        r.push_back(dataset.true_labels ? std::to_string((*dataset.true_labels)[i]) : std::string{});
        r.push_back(std::to_string(dataset.noisy_labels[i]));
        for (double v : dataset.features.row(i)) r.push_back(format_double(v));
        t.rows.push_back(std::move(r));
    }
    return format_csv(t);
}

LabeledDataset parse_dataset_csv(std::string_view text, int num_classes) {
    auto t = parse_csv(text);
    if (t.header.size() < 3 || t.header[0] != "id" || t.header[1] != "y" || t.header[2] != "yhat")
        throw Error("dataset csv: header must start with id,y,yhat");
    const std::size_t d = t.header.size() - 3;
    LabeledDataset ds;
    ds.features = Matrix(t.rows.size(), d);
    ds.ids.reserve(t.rows.size());
    ds.noisy_labels.reserve(t.rows.size());
    std::vector<Label> truth;
    std::size_t with_truth = 0;
    Label max_label = 1;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        ds.ids.push_back(parse_int(r[0]));
        if (!r[1].empty()) {
            truth.push_back(static_cast<Label>(parse_int(r[1])));
            ++with_truth;
            max_label = std::max(max_label, truth.back());
        } else {
            truth.push_back(0);
        }
        ds.noisy_labels.push_back(static_cast<Label>(parse_int(r[2])));
        max_label = std::max(max_label, ds.noisy_labels.back());
        for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = parse_double(r[3 + j]);
    }
    if (with_truth != 0 && with_truth != t.rows.size())
        throw Error("dataset csv: ground truth present for only some rows");
    if (with_truth != 0) ds.true_labels = std::move(truth);
    ds.num_classes = num_classes > 0 ? num_classes : max_label + 1;
    ds.validate();
    return ds;
}

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& dataset) {
    write_text(path, format_dataset_csv(dataset));
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path, int num_classes) {
    return parse_dataset_csv(read_text(path), num_classes);
}

std::string format_embedding_csv(std::span<const SampleId> ids, const Matrix& values) {
    if (ids.size() != values.rows()) throw Error("embedding csv: id count does not match rows");
    CsvTable t;
    t.header = {"id"};
    for (std::size_t j = 0; j < values.cols(); ++j) t.header.push_back("r" + std::to_string(j));
    for (std::size_t i = 0; i < values.rows(); ++i) {
        std::vector<std::string> r{std::to_string(ids[i])};
        for (double v : values.row(i)) r.push_back(format_double(v));
        t.rows.push_back(std::move(r));
    }
    return format_csv(t);
}

EmbeddingTable parse_embedding_csv(std::string_view text) {
    auto t = parse_csv(text);
    if (t.header.size() < 2 || t.header[0] != "id") throw Error("embedding csv: header must be id,r0,...");
    EmbeddingTable out;
    out.values = Matrix(t.rows.size(), t.header.size() - 1);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out.ids.push_back(parse_int(t.rows[i][0]));
        for (std::size_t j = 1; j < t.header.size(); ++j) out.values(i, j - 1) = parse_double(t.rows[i][j]);
    }
    return out;
}

void write_embedding_csv(const std::filesystem::path& path, std::span<const SampleId> ids, const Matrix& values) {
    write_text(path, format_embedding_csv(ids, values));
}

EmbeddingTable read_embedding_csv(const std::filesystem::path& path) {
    return parse_embedding_csv(read_text(path));
}

std::string format_scores_csv(std::span<const SampleId> ids, std::span<const double> scores,
                              std::string_view score_name) {
    if (ids.size() != scores.size()) throw Error("scores csv: id count does not match scores");
    std::string out = "id," + std::string(score_name) + "\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out += std::to_string(ids[i]) + "," + format_double(scores[i]) + "\n";
    return out;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const SampleId> ids,
                      std::span<const double> scores, std::string_view score_name) {
    write_text(path, format_scores_csv(ids, scores, score_name));
}

void write_subset(const std::filesystem::path& path, std::span<const SampleId> ids) {
    std::string out;
    for (auto id : ids) out += std::to_string(id) + "\n";
    write_text(path, out);
}

std::vector<SampleId> read_subset(const std::filesystem::path& path) {
    auto text = read_text(path);
    std::vector<SampleId> ids;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ids.push_back(parse_int(line));
    }
    return ids;
}

std::string format_feasibility_csv(const theory::FeasibilityReport& report) {
    std::string out = "d,logL,logU,feasible\n";
    for (const auto& r : report.rows)
        out += std::to_string(r.d) + "," + format_double(r.log_lower) + "," + format_double(r.log_upper) + "," +
               (r.feasible ? "1" : "0") + "\n";
    return out;
}

}  // namespace icut::io
