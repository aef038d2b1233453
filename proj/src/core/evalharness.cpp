#include "flightrag/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "flightrag/error.hpp"
#include "flightrag/graphrag.hpp"
#include "flightrag/rng.hpp"
#include "flightrag/sqlrag.hpp"
#include "flightrag/timestamp.hpp"
#include "flightrag/traditional_rag.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace flightrag::eval {

namespace {

using json = nlohmann::ordered_json;
using datagen::QaPair;

constexpr std::size_t kMaxReason = 240;

std::string clip(std::string s) {
    if (s.size() > kMaxReason) {
        s.resize(kMaxReason);
        s += "...";
    }
    return s;
}

std::string error_text(const Error& e) { return std::string(errc_name(e.code())) + ": " + e.what(); }

// lowercase, runs of whitespace -> one space
std::string fold(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (detail::is_space(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
    return buf;
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

std::string lpad(std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
}

double ratio(std::size_t a, std::size_t b) { return b ? double(a) / double(b) : 0.0; }

// Methods first in search order, pipelines next, anything else by name.
std::vector<std::string> row_order(const std::map<std::string, Metrics>& rows) {
    std::vector<std::string> known;
    for (retrieval::Method m : {retrieval::Method::bm25, retrieval::Method::tfidf_cos,
                                retrieval::Method::tfidf_euc, retrieval::Method::lsi,
                                retrieval::Method::vector, retrieval::Method::hybrid,
                                retrieval::Method::mmr})
        known.emplace_back(retrieval::method_name(m));
    for (Pipeline p : {Pipeline::traditional, Pipeline::sql, Pipeline::graph})
        known.emplace_back(pipeline_name(p));
    std::vector<std::string> out;
    for (const auto& k : known)
        if (rows.count(k)) out.push_back(k);
    for (const auto& [k, _] : rows)
        if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
    return out;
}

using Field = std::optional<double> Metrics::*;
struct Column {
    std::string_view name;
    Field field;
};
constexpr Column kColumns[] = {
    {"top1", &Metrics::top1},
    {"top10", &Metrics::top10},
    {"top30", &Metrics::top30},
    {"answer_acc", &Metrics::answer_acc},
    {"em", &Metrics::em},
    {"ex", &Metrics::ex},
    {"reasoning_acc", &Metrics::reasoning_acc},
    {"hallucination_rate", &Metrics::hallucination_rate},
};

struct Reference {
    std::string_view what;
    std::string_view value;
};
// Figures measured on a private operational dataset with hosted models.
constexpr Reference kReferences[] = {
    {"bm25 top1", "86.54%"},
    {"traditional answer_acc (bm25)", "84.84%"},
    {"sql ex (crp)", "80.85%"},
    {"graph ex", "91.49%"},
    {"graph reasoning_acc", "68.75%"},
    {"classification mean", "90.45%"},
};

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        w[c] = header[c].size();
        for (const auto& r : rows) w[c] = std::max(w[c], r[c].size());
    }
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
        std::string l;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) l += "  ";
            l += c == 0 ? pad(cells[c], w[c]) : lpad(cells[c], w[c]);
        }
        while (!l.empty() && l.back() == ' ') l.pop_back();
        out += l + "\n";
    };
    line(header);
    std::size_t total = 0;
    for (auto x : w) total += x;
    out += std::string(total + 2 * (w.size() - 1), '-') + "\n";
    for (const auto& r : rows) line(r);
    return out;
}

std::string render_text(const EvalReport& r) {
    std::string out = "Evaluation report " + r.run_id + "\n";
    out += "datasets: " + detail::join(r.dataset_ids, ", ") + "\n";

    const auto order = row_order(r.per_method);
    std::vector<std::vector<std::string>> retrieval_rows, pipeline_rows;
    for (const auto& name : order) {
        const Metrics& m = r.per_method.at(name);
        const auto cell = [](const std::optional<double>& v) { return v ? pct(*v) : std::string("-"); };
        if (m.top1 || m.top10 || m.top30) retrieval_rows.push_back({name, cell(m.top1), cell(m.top10), cell(m.top30)});
        if (m.answer_acc || m.em || m.ex || m.reasoning_acc || m.hallucination_rate)
            pipeline_rows.push_back({name, cell(m.answer_acc), cell(m.em), cell(m.ex), cell(m.reasoning_acc),
                                     cell(m.hallucination_rate)});
    }
    out += "\nRetrieval accuracy (grounding article within top k)\n";
    out += table({"method", "top1", "top10", "top30"}, retrieval_rows);
    out += "\nPipelines\n";
    out += table({"pipeline", "answer_acc", "em", "ex", "reasoning_acc", "hallucination_rate"}, pipeline_rows);

    out += "\nClassification\n";
    if (r.classification_runs.empty()) {
        out += "not run\n";
    } else {
        std::vector<std::string> runs;
        for (double a : r.classification_runs) runs.push_back(pct(a));
        const double mean = std::accumulate(r.classification_runs.begin(), r.classification_runs.end(), 0.0) /
                            double(r.classification_runs.size());
        out += "runs: " + detail::join(runs, ", ") + "\n";
        out += "mean: " + pct(mean) + "\n";
    }
    if (!r.confusion.empty()) {
        out += "confusion (rows true, columns predicted)\n";
        std::vector<std::string> header = {"true\\pred"};
        for (const auto& l : r.confusion.labels) header.push_back(l);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < r.confusion.labels.size(); ++i) {
            std::vector<std::string> row = {r.confusion.labels[i]};
            for (auto n : r.confusion.counts[i]) row.push_back(std::to_string(n));
            rows.push_back(std::move(row));
        }
        out += table(header, rows);
    }

    out += "\nfailures: " + std::to_string(r.failures.size()) + " (listed in report.json)\n";
    out += "\nReference figures from a live deployment on private data with hosted models\n"
           "(not reproduction targets):\n";
    for (const auto& ref : kReferences) out += "  " + pad(std::string(ref.what), 32) + std::string(ref.value) + "\n";
    return out;
}

std::string render_csv(const EvalReport& r) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& name : row_order(r.per_method)) {
        const Metrics& m = r.per_method.at(name);
        out += name;
        for (const auto& c : kColumns) {
            out += ',';
            if (const auto& v = m.*(c.field)) out += fixed6(*v);
        }
        out += "\n";
    }
    return out;
}

json metrics_json(const Metrics& m) {
    json j = json::object();
    for (const auto& c : kColumns) {
        const auto& v = m.*(c.field);
        j[std::string(c.name)] = v ? json(*v) : json(nullptr);
    }
    return j;
}

std::string render_json(const EvalReport& r) {
    json j;
    j["run_id"] = r.run_id;
    j["dataset_ids"] = r.dataset_ids;
    json pm = json::object();
    for (const auto& name : row_order(r.per_method)) pm[name] = metrics_json(r.per_method.at(name));
    j["per_method"] = pm;
    j["confusion"] = {{"labels", r.confusion.labels}, {"counts", r.confusion.counts}};
    j["classification_runs"] = r.classification_runs;
    j["config_snapshot"] = r.config_snapshot;
    json f = json::array();
    for (const auto& x : r.failures)
        f.push_back({{"row", x.row}, {"task", x.task}, {"question", x.question}, {"reason", x.reason}});
    j["failures"] = f;
    json refs = json::object();
    for (const auto& ref : kReferences) refs[std::string(ref.what)] = ref.value;
    j["reference_not_reproduction_targets"] = refs;
    return j.dump(2) + "\n";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io, "cannot write " + p.string());
    out << text;
    if (!out) fail(Errc::io, "write failed: " + p.string());
}

}  // namespace

ConfusionMatrix ConfusionMatrix::for_categories() {
    ConfusionMatrix m;
    m.labels.emplace_back(category_name(QuestionCategory::straightforward));
    for (auto c : kAmbiguousCategories) m.labels.emplace_back(category_name(c));
    m.counts.assign(m.labels.size(), std::vector<std::size_t>(m.labels.size(), 0));
    return m;
}

void ConfusionMatrix::add(QuestionCategory truth, QuestionCategory predicted, std::size_t n) {
    const auto t = static_cast<std::size_t>(category_code(truth));
    const auto p = static_cast<std::size_t>(category_code(predicted));
    if (t >= counts.size() || p >= counts.size()) fail(Errc::internal, "category outside the matrix");
    counts[t][p] += n;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += row_sum(i);
    return n;
}

std::size_t ConfusionMatrix::diagonal() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t row) const {
    return std::accumulate(counts[row].begin(), counts[row].end(), std::size_t{0});
}

void EvalReport::validate() const {
    for (const auto& [name, m] : per_method) {
        for (const auto& c : kColumns) {
            const auto& v = m.*(c.field);
            if (v && (*v < 0.0 || *v > 1.0))
                fail(Errc::internal, name + "." + std::string(c.name) + " outside [0,1]");
        }
        if ((m.top1 && m.top10 && *m.top1 > *m.top10) || (m.top10 && m.top30 && *m.top10 > *m.top30))
            fail(Errc::internal, name + ": top-k accuracy not monotone");
    }
    for (double a : classification_runs)
        if (a < 0.0 || a > 1.0) fail(Errc::internal, "classification accuracy outside [0,1]");
}

bool answer_matches(std::string_view answer, std::string_view gold) {
    if (gold == datagen::kClarify || gold.empty()) return false;
    // list answers: every item, any order
    if (gold.find(", ") != std::string_view::npos) {
        for (const auto& item : detail::split(gold, ','))
            if (!answer_matches(answer, detail::trim(item))) return false;
        return true;
    }
    if (const auto t = Timestamp::parse(gold)) {
        for (const auto& e : extract_entities(answer)) {
            if (e.kind != EntityKind::timestamp) continue;
            if (const auto a = Timestamp::parse(e.text); a && *a == *t) return true;
        }
    }
    if (const auto g = router::normalize_gate(gold)) {
        for (const auto& e : extract_entities(answer)) {
            if (e.kind != EntityKind::ramp && e.kind != EntityKind::gate) continue;
            if (router::normalize_gate(e.text) == g) return true;
        }
    }
    return fold(answer).find(fold(gold)) != std::string::npos;
}

std::map<std::string, Metrics> eval_retrieval(const retrieval::IndexBundle& index, const std::vector<QaPair>& qa,
                                              const std::vector<retrieval::Method>& methods,
                                              double hybrid_keyword_weight, double mmr_lambda) {
    for (const auto& p : qa)
        if (p.grounding_uid.empty()) fail(Errc::missing_grounding, p.question);
    std::map<std::string, Metrics> out;
    for (auto method : methods) {
        std::size_t hits[3] = {0, 0, 0};
        for (const auto& p : qa) {
            const auto list = retrieve(index, p.question, method, 30, hybrid_keyword_weight, mmr_lambda);
            const auto rank = list.rank_of(p.grounding_uid);
            if (!rank) continue;
            hits[0] += *rank <= 1;
            hits[1] += *rank <= 10;
            hits[2] += *rank <= 30;
        }
        Metrics m;
        m.top1 = ratio(hits[0], qa.size());
        m.top10 = ratio(hits[1], qa.size());
        m.top30 = ratio(hits[2], qa.size());
        out[std::string(retrieval::method_name(method))] = m;
    }
    return out;
}

AnswerStats eval_answers(const Engine& engine, Pipeline pipeline, const std::vector<QaPair>& qa) {
    AnswerStats s;
    const std::string row(pipeline_name(pipeline));
    for (const auto& p : qa) {
        ++s.total;
        try {
            const auto r = engine.ask(p.question, pipeline);
            s.flagged += !r.flags.empty();
            const bool ok = p.needs_clarification() ? r.needs_clarification
                                                    : !r.needs_clarification && answer_matches(r.answer, p.answer);
            if (ok) {
                ++s.correct;
            } else {
                std::string why = "expected " + p.answer + ", got: " + r.answer;
                if (!r.query_error.empty()) why += " [" + r.query_error + "]";
                s.failures.push_back({row, "answers", p.question, clip(why)});
            }
        } catch (const Error& e) {
            s.failures.push_back({row, "answers", p.question, clip(error_text(e))});
        }
    }
    return s;
}

QueryStats eval_queries(const Engine& engine, Pipeline pipeline, const std::vector<datagen::GoldQuery>& gold) {
    if (pipeline == Pipeline::traditional) fail(Errc::invalid_argument, "query metrics need sql or graph");
    QueryStats s;
    const std::string row(pipeline_name(pipeline));
    for (const auto& g : gold) {
        ++s.total;
        try {
            const std::string predicted = engine.generate_query(g.question, pipeline);
            bool em = false, ex = false;
            std::string why;
            if (pipeline == Pipeline::sql) {
                const auto pq = sql::SqlQuery::from(predicted);
                const auto gq = sql::SqlQuery::from(g.query);
                em = sql::exact_match(pq, gq);
                ex = sql::execution_match(engine.store(), pq, gq, &why);
            } else {
                const auto pq = graph::GraphQuery::parse(predicted);
                const auto gq = graph::GraphQuery::parse(g.query);
                em = pq.canonical() == gq.canonical();
                ex = sql::results_equivalent(graph::execute_graph(engine.graph(), pq),
                                             graph::execute_graph(engine.graph(), gq));
                if (!ex) why = "results differ";
            }
            s.exact += em;
            s.execution += ex;
            if (!ex) s.failures.push_back({row, "queries", g.question, clip(why + ": " + predicted)});
        } catch (const Error& e) {
            s.failures.push_back({row, "queries", g.question, clip(error_text(e))});
        }
    }
    return s;
}

double ClassificationStats::mean() const {
    if (run_accuracies.empty()) return 0.0;
    return std::accumulate(run_accuracies.begin(), run_accuracies.end(), 0.0) / double(run_accuracies.size());
}

ClassificationStats eval_classification(const llm::Llm* model, const router::RouterOptions& options,
                                        const std::vector<QaPair>& qa, std::size_t repeats) {
    if (repeats == 0) fail(Errc::invalid_argument, "repeats must be at least 1");
    ClassificationStats s;
    s.confusion = ConfusionMatrix::for_categories();
    for (std::size_t run = 0; run < repeats; ++run) {
        std::size_t correct = 0;
        for (const auto& p : qa) {
            const auto predicted = router::classify(p.question, model, options);
            s.confusion.add(p.category, predicted);
            correct += predicted == p.category;
        }
        s.run_accuracies.push_back(ratio(correct, qa.size()));
    }
    return s;
}

std::vector<QaPair> sample_pairs(const std::vector<QaPair>& pairs, std::size_t n, std::uint64_t seed) {
    if (n >= pairs.size()) return pairs;
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<QaPair> out;
    out.reserve(n);
    for (auto i : idx) out.push_back(pairs[i]);
    return out;
}

std::string render_report(const EvalReport& report, Format format) {
    switch (format) {
        case Format::text_table: return render_text(report);
        case Format::json: return render_json(report);
        case Format::csv: return render_csv(report);
    }
    fail(Errc::internal, "unknown report format");
}

EvalReport report_from_json(std::string_view text) {
    EvalReport r;
    try {
        const json j = json::parse(text);
        r.run_id = j.at("run_id").get<std::string>();
        r.dataset_ids = j.at("dataset_ids").get<std::vector<std::string>>();
        for (const auto& [name, mj] : j.at("per_method").items()) {
            Metrics m;
            for (const auto& c : kColumns) {
                const auto& v = mj.at(std::string(c.name));
                if (!v.is_null()) m.*(c.field) = v.get<double>();
            }
            r.per_method[name] = m;
        }
        r.confusion.labels = j.at("confusion").at("labels").get<std::vector<std::string>>();
        r.confusion.counts = j.at("confusion").at("counts").get<std::vector<std::vector<std::size_t>>>();
        r.classification_runs = j.at("classification_runs").get<std::vector<double>>();
        r.config_snapshot = j.at("config_snapshot").get<std::map<std::string, std::string>>();
        for (const auto& f : j.at("failures"))
            r.failures.push_back({f.at("row").get<std::string>(), f.at("task").get<std::string>(),
                                  f.at("question").get<std::string>(), f.at("reason").get<std::string>()});
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("report: ") + e.what());
    }
    return r;
}

std::string render_confusion_csv(const ConfusionMatrix& m) {
    std::string out = "true\\predicted";
    for (const auto& l : m.labels) out += "," + l;
    out += "\n";
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        out += m.labels[i];
        for (auto n : m.counts[i]) out += "," + std::to_string(n);
        out += "\n";
    }
    return out;
}

EvalPlan plan_from_config(const RunConfig& config) {
    EvalPlan plan;
    if (config.pipeline == "all") {
        plan.pipelines = {Pipeline::traditional, Pipeline::sql, Pipeline::graph};
    } else {
        const auto p = parse_pipeline(config.pipeline);
        if (!p) fail(Errc::invalid_argument, "unknown pipeline: " + config.pipeline);
        plan.pipelines = {*p};
    }
    static const std::set<std::string> tasks = {"retrieval", "answers", "classification", "queries", "reasoning"};
    if (config.task != "all") {
        if (!tasks.count(config.task)) fail(Errc::invalid_argument, "unknown task: " + config.task);
        plan.retrieval = config.task == "retrieval";
        plan.answers = config.task == "answers";
        plan.classification = config.task == "classification";
        plan.queries = config.task == "queries";
        plan.reasoning = config.task == "reasoning";
    }
    return plan;
}

EvalReport run_eval(const datagen::Bundle& bundle, const Engine& engine, const EvalPlan& plan,
                    const RunConfig& config) {
    EvalReport r;
    r.config_snapshot = config_snapshot(config);
    const auto has = [&](Pipeline p) {
        return std::find(plan.pipelines.begin(), plan.pipelines.end(), p) != plan.pipelines.end();
    };
    const auto count = [](std::string_view name, std::size_t n) { return std::string(name) + ":" + std::to_string(n); };
    r.dataset_ids.push_back(count("flights", bundle.store.size()));

    if (plan.retrieval && has(Pipeline::traditional)) {
        r.dataset_ids.push_back(count("straightforward", bundle.straightforward.size()));
        std::vector<retrieval::Method> methods = {retrieval::Method::bm25,   retrieval::Method::tfidf_cos,
                                                  retrieval::Method::tfidf_euc, retrieval::Method::lsi,
                                                  retrieval::Method::vector, retrieval::Method::hybrid,
                                                  retrieval::Method::mmr};
        if (engine.config().index.lsi_rank == 0) std::erase(methods, retrieval::Method::lsi);
        for (auto& [name, m] : eval_retrieval(engine.index(), bundle.straightforward, methods,
                                              engine.config().hybrid_keyword_weight, engine.config().mmr_lambda))
            r.per_method[name] = m;
    }

    if (plan.answers) {
        std::vector<QaPair> pool = bundle.straightforward;
        pool.insert(pool.end(), bundle.ambiguous.begin(), bundle.ambiguous.end());
        const auto sample = sample_pairs(pool, config.answer_sample, config.seed);
        r.dataset_ids.push_back(count("answer_sample", sample.size()));
        r.config_snapshot["answer_sample.seed"] = std::to_string(config.seed);
        r.config_snapshot["answer_sample.pool"] = "straightforward+ambiguous";
        for (Pipeline p : plan.pipelines) {
            auto s = eval_answers(engine, p, sample);
            Metrics& m = r.per_method[std::string(pipeline_name(p))];
            m.answer_acc = s.accuracy();
            if (p == Pipeline::traditional) m.hallucination_rate = s.flagged_rate();
            r.failures.insert(r.failures.end(), s.failures.begin(), s.failures.end());
        }
    }

    if (plan.reasoning) {
        r.dataset_ids.push_back(count("reasoning", bundle.reasoning.size()));
        for (Pipeline p : plan.pipelines) {
            auto s = eval_answers(engine, p, bundle.reasoning);
            for (auto& f : s.failures) f.task = "reasoning";
            r.per_method[std::string(pipeline_name(p))].reasoning_acc = s.accuracy();
            r.failures.insert(r.failures.end(), s.failures.begin(), s.failures.end());
        }
    }

    if (plan.queries) {
        for (Pipeline p : plan.pipelines) {
            if (p == Pipeline::traditional) continue;
            const auto& gold = p == Pipeline::sql ? bundle.gold_sql : bundle.gold_graph;
            r.dataset_ids.push_back(count(p == Pipeline::sql ? "gold_sql" : "gold_graph", gold.size()));
            auto s = eval_queries(engine, p, gold);
            Metrics& m = r.per_method[std::string(pipeline_name(p))];
            m.em = s.em();
            m.ex = s.ex();
            r.failures.insert(r.failures.end(), s.failures.begin(), s.failures.end());
        }
    }

    if (plan.classification) {
        r.dataset_ids.push_back(count("classification", bundle.classification.size()));
        router::RouterOptions o;
        o.fewshot = router::classification_examples(bundle.fewshot_classification);
        o.max_prompt_chars = engine.config().max_prompt_chars;
        o.rules_fallback = engine.config().rules_fallback;
        auto s = eval_classification(engine.model(), o, bundle.classification, config.repeats);
        r.confusion = std::move(s.confusion);
        r.classification_runs = std::move(s.run_accuracies);
    }

    std::string key;
    for (const auto& [k, v] : r.config_snapshot) key += k + "=" + v + "\n";
    for (const auto& d : r.dataset_ids) key += d + "\n";
    r.run_id = "eval-" + detail::hex64(detail::fnv1a(key)).substr(0, 12);
    r.validate();
    return r;
}

std::filesystem::path write_run(const EvalReport& report, const std::filesystem::path& parent) {
    const auto dir = parent / report.run_id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "report.json", render_report(report, Format::json));
    write_file(dir / "report.csv", render_report(report, Format::csv));
    write_file(dir / "report.txt", render_report(report, Format::text_table));
    write_file(dir / "confusion.csv", render_confusion_csv(report.confusion));
    return dir;
}

}  // namespace flightrag::eval
