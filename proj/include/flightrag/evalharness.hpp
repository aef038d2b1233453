#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/category.hpp"
#include "flightrag/config.hpp"
#include "flightrag/datagen.hpp"
#include "flightrag/engine.hpp"
#include "flightrag/retrieval.hpp"
#include "flightrag/router.hpp"

namespace flightrag::eval {

// Unset metrics were not measured for that row.
struct Metrics {
    std::optional<double> top1, top10, top30;
    std::optional<double> answer_acc;
    std::optional<double> em, ex;
    std::optional<double> reasoning_acc;
    std::optional<double> hallucination_rate;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Rows are true categories, columns predictions.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> counts;

    static ConfusionMatrix for_categories();
    void add(QuestionCategory truth, QuestionCategory predicted, std::size_t n = 1);
    std::size_t total() const;
    std::size_t diagonal() const;
    std::size_t row_sum(std::size_t row) const;
    bool empty() const { return labels.empty(); }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Failure {
    std::string row;  // method or pipeline
    std::string task;
    std::string question;
    std::string reason;

    friend bool operator==(const Failure&, const Failure&) = default;
};

struct EvalReport {
    std::string run_id;
    std::vector<std::string> dataset_ids;
    std::map<std::string, Metrics> per_method;
    ConfusionMatrix confusion;
    std::vector<double> classification_runs;
    std::map<std::string, std::string> config_snapshot;
    std::vector<Failure> failures;

    // Fails with internal when a rate leaves [0,1] or top-k is not monotone.
    void validate() const;
    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Normalized containment: case and spacing folded, timestamps compared as
// instants, gate codes zero-padded, comma lists matched item by item in any
// order. A clarification gold answer is never matched by text.
bool answer_matches(std::string_view answer, std::string_view gold);

std::map<std::string, Metrics> eval_retrieval(const retrieval::IndexBundle& index,
                                              const std::vector<datagen::QaPair>& qa,
                                              const std::vector<retrieval::Method>& methods,
                                              double hybrid_keyword_weight = 0.9,
                                              double mmr_lambda = 0.5);

struct AnswerStats {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t flagged = 0;
    std::vector<Failure> failures;

    double accuracy() const { return total ? double(correct) / double(total) : 0.0; }
    double flagged_rate() const { return total ? double(flagged) / double(total) : 0.0; }
};

// Clarification pairs count as correct when the engine asks back.
AnswerStats eval_answers(const Engine& engine, Pipeline pipeline,
                         const std::vector<datagen::QaPair>& qa);

struct QueryStats {
    std::size_t total = 0;
    std::size_t exact = 0;
    std::size_t execution = 0;
    std::vector<Failure> failures;

    double em() const { return total ? double(exact) / double(total) : 0.0; }
    double ex() const { return total ? double(execution) / double(total) : 0.0; }
};

// pipeline is sql or graph.
QueryStats eval_queries(const Engine& engine, Pipeline pipeline,
                        const std::vector<datagen::GoldQuery>& gold);

struct ClassificationStats {
    ConfusionMatrix confusion;  // summed over runs
    std::vector<double> run_accuracies;

    double mean() const;
};

ClassificationStats eval_classification(const llm::Llm* model, const router::RouterOptions& options,
                                        const std::vector<datagen::QaPair>& qa,
                                        std::size_t repeats);

// Seeded sample without replacement, in dataset order.
std::vector<datagen::QaPair> sample_pairs(const std::vector<datagen::QaPair>& pairs, std::size_t n,
                                          std::uint64_t seed);

enum class Format { text_table, json, csv };

// CSV columns: method,top1,top10,top30,answer_acc,em,ex,reasoning_acc,hallucination_rate
inline constexpr std::string_view kCsvHeader =
    "method,top1,top10,top30,answer_acc,em,ex,reasoning_acc,hallucination_rate";

std::string render_report(const EvalReport& report, Format format);
EvalReport report_from_json(std::string_view text);
std::string render_confusion_csv(const ConfusionMatrix& m);

struct EvalPlan {
    std::vector<Pipeline> pipelines;
    bool retrieval = true;
    bool answers = true;
    bool classification = true;
    bool queries = true;
    bool reasoning = true;
};

// Parses the pipeline and task settings of a config ("all" or one name).
EvalPlan plan_from_config(const RunConfig& config);

// Runs the planned tasks over the bundle with `engine` (built on bundle.store).
EvalReport run_eval(const datagen::Bundle& bundle, const Engine& engine, const EvalPlan& plan,
                    const RunConfig& config);

// Writes report.json, report.csv, report.txt and confusion.csv into
// parent/<run_id> and returns that directory.
std::filesystem::path write_run(const EvalReport& report, const std::filesystem::path& parent);

}  // namespace flightrag::eval
