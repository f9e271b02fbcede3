#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icut/core.hpp"
#include "icut/repr.hpp"
#include "icut/theory.hpp"

namespace icut::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

/// Header plus string cells. No quoting: every format here is numeric or
/// a bare token.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string format_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Header id,y,yhat,f0..f{d-1}; y is empty when ground truth is unknown.
std::string format_dataset_csv(const LabeledDataset& dataset);
/// num_classes = 0 infers one past the largest label (at least 2).
LabeledDataset parse_dataset_csv(std::string_view text, int num_classes = 0);
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& dataset);
LabeledDataset read_dataset_csv(const std::filesystem::path& path, int num_classes = 0);

/// Header id,r0..r{m-1}.
std::string format_embedding_csv(std::span<const SampleId> ids, const Matrix& values);
EmbeddingTable parse_embedding_csv(std::string_view text);
void write_embedding_csv(const std::filesystem::path& path, std::span<const SampleId> ids, const Matrix& values);
EmbeddingTable read_embedding_csv(const std::filesystem::path& path);

/// Two-column id,<score_name> table, dataset order.
std::string format_scores_csv(std::span<const SampleId> ids, std::span<const double> scores,
                              std::string_view score_name = "score");
void write_scores_csv(const std::filesystem::path& path, std::span<const SampleId> ids,
                      std::span<const double> scores, std::string_view score_name = "score");

/// One id per line.
void write_subset(const std::filesystem::path& path, std::span<const SampleId> ids);
std::vector<SampleId> read_subset(const std::filesystem::path& path);

/// Header d,logL,logU,feasible.
std::string format_feasibility_csv(const theory::FeasibilityReport& report);

}  // namespace icut::io
