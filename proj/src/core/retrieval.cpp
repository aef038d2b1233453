#include "flightrag/retrieval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "flightrag/error.hpp"
#include "text_util.hpp"

namespace flightrag::retrieval {

namespace {

bool entry_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

RankedList top_k(std::vector<RankedEntry> entries, std::size_t k, Method method) {
    if (k == 0) fail(Errc::invalid_argument, "k must be at least 1");
    const std::size_t n = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(n),
                      entries.end(), entry_before);
    entries.resize(n);
    return RankedList{std::move(entries), method};
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double sparse_norm(const std::vector<std::pair<std::size_t, double>>& v) {
    double s = 0.0;
    for (const auto& [_, x] : v) s += x * x;
    return std::sqrt(s);
}

// Dot product of two term-sorted sparse vectors.
double sparse_dot(const std::vector<std::pair<std::size_t, double>>& a,
                  const std::vector<std::pair<std::size_t, double>>& b) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first) ++i;
        else if (a[i].first > b[j].first) ++j;
        else s += a[i++].second * b[j++].second;
    }
    return s;
}

}  // namespace

std::string_view method_name(Method m) {
    switch (m) {
        case Method::bm25: return "bm25";
        case Method::tfidf_cos: return "tfidf_cos";
        case Method::tfidf_euc: return "tfidf_euc";
        case Method::lsi: return "lsi";
        case Method::vector: return "vector";
        case Method::hybrid: return "hybrid";
        case Method::mmr: return "mmr";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : {Method::bm25, Method::tfidf_cos, Method::tfidf_euc, Method::lsi,
                     Method::vector, Method::hybrid, Method::mmr})
        if (method_name(m) == name) return m;
    return std::nullopt;
}

std::vector<std::string> RankedList::doc_ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.doc_id);
    return out;
}

std::optional<std::size_t> RankedList::rank_of(std::string_view doc_id) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].doc_id == doc_id) return i + 1;
    return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!detail::is_alnum(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && detail::is_alnum(text[j])) ++j;
        const std::string token = detail::to_lower(text.substr(i, j - i));
        out.push_back(token);

        bool has_alpha = false, has_digit = false;
        for (char c : token) (detail::is_digit(c) ? has_digit : has_alpha) = true;
        if (has_alpha && has_digit) {
            std::size_t a = 0;
            while (a < token.size()) {
                std::size_t b = a;
                const bool digit = detail::is_digit(token[a]);
                while (b < token.size() && detail::is_digit(token[b]) == digit) ++b;
                out.push_back(token.substr(a, b - a));
                a = b;
            }
        }
        i = j;
    }
    return out;
}

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
    std::vector<double> v(dim_, 0.0);
    for (const auto& token : tokenize(text)) {
        const std::uint64_t h = detail::fnv1a(token);
        const double sign = ((h >> 40) & 1U) ? -1.0 : 1.0;
        v[h % dim_] += sign;
    }
    const double n = norm(v);
    if (n > 0)
        for (auto& x : v) x /= n;
    return v;
}

IndexBundle IndexBundle::build(const std::vector<Article>& articles, const IndexConfig& config) {
    IndexBundle ix;
    ix.config_ = config;
    if (config.custom_embedder) {
        ix.embedder_ = config.custom_embedder;
    } else if (config.embedder == "hashing") {
        if (config.embedding_dim == 0) fail(Errc::invalid_argument, "embedding dimension is 0");
        ix.embedder_ = std::make_shared<HashingEmbedder>(config.embedding_dim);
    } else {
        fail(Errc::invalid_argument, "unknown embedder '" + config.embedder + "'");
    }

    const std::size_t n = articles.size();
    std::vector<std::vector<std::string>> tokens(n);
    for (std::size_t d = 0; d < n; ++d) {
        ix.doc_ids_.push_back(articles[d].doc_id);
        ix.doc_texts_.push_back(articles[d].text);
        ix.doc_lookup_.emplace(articles[d].doc_id, d);
        tokens[d] = tokenize(articles[d].text);
        for (const auto& t : tokens[d]) ix.vocabulary_.emplace(t, 0);
    }
    // Term ids follow lexicographic order so they do not depend on corpus order.
    std::size_t next = 0;
    for (auto& [_, id] : ix.vocabulary_) id = next++;

    ix.postings_.assign(ix.vocabulary_.size(), {});
    ix.doc_terms_.assign(n, {});
    ix.doc_lengths_.assign(n, 0);
    std::size_t total_len = 0;
    for (std::size_t d = 0; d < n; ++d) {
        std::map<std::size_t, std::size_t> counts;
        for (const auto& t : tokens[d]) ++counts[ix.vocabulary_.at(t)];
        ix.doc_lengths_[d] = tokens[d].size();
        total_len += tokens[d].size();
        for (const auto& [term, tf] : counts) {
            ix.postings_[term].push_back(Posting{d, tf});
            ix.doc_terms_[d].emplace_back(term, tf);
        }
    }
    ix.avg_doc_length_ = n ? static_cast<double>(total_len) / static_cast<double>(n) : 0.0;

    const double N = static_cast<double>(n);
    ix.bm25_idf_.resize(ix.vocabulary_.size());
    ix.tfidf_idf_.resize(ix.vocabulary_.size());
    for (std::size_t t = 0; t < ix.vocabulary_.size(); ++t) {
        const double df = static_cast<double>(ix.postings_[t].size());
        ix.bm25_idf_[t] = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
        ix.tfidf_idf_[t] = std::log((1.0 + N) / (1.0 + df)) + 1.0;
    }

    ix.tfidf_docs_.resize(n);
    ix.tfidf_norms_.resize(n);
    ix.embeddings_.resize(n);
    for (std::size_t d = 0; d < n; ++d) {
        for (const auto& [term, tf] : ix.doc_terms_[d])
            ix.tfidf_docs_[d].emplace_back(term, static_cast<double>(tf) * ix.tfidf_idf_[term]);
        ix.tfidf_norms_[d] = sparse_norm(ix.tfidf_docs_[d]);
        ix.embeddings_[d] = ix.embedder_->embed(articles[d].text);
    }

    if (config.lsi_rank > 0 && n >= 2) ix.build_lsi();
    return ix;
}

void IndexBundle::build_lsi() {
    // Thin SVD of the term-document matrix D through the eigensystem of the
    // document Gram matrix D^T D; U = D V / sigma.
    const std::size_t n = doc_count();
    Eigen::MatrixXd gram(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = sparse_dot(tfidf_docs_[i], tfidf_docs_[j]);
            gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) fail(Errc::internal, "LSI eigensolver failed");

    const Eigen::VectorXd& eig = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& vecs = solver.eigenvectors();
    singular_values_.clear();
    for (Eigen::Index i = eig.size() - 1; i >= 0; --i)
        singular_values_.push_back(std::sqrt(std::max(eig(i), 0.0)));

    const double sigma_max = singular_values_.empty() ? 0.0 : singular_values_.front();
    std::size_t numeric_rank = 0;
    for (double s : singular_values_)
        if (s > sigma_max * 1e-6) ++numeric_rank;
    lsi_rank_ = std::min(config_.lsi_rank, numeric_rank);
    if (lsi_rank_ == 0) return;

    lsi_basis_.assign(vocabulary_.size(), std::vector<double>(lsi_rank_, 0.0));
    lsi_docs_.assign(n, std::vector<double>(lsi_rank_, 0.0));
    for (std::size_t c = 0; c < lsi_rank_; ++c) {
        const Eigen::Index col = eig.size() - 1 - static_cast<Eigen::Index>(c);
        const double sigma = singular_values_[c];
        for (std::size_t d = 0; d < n; ++d) {
            const double v = vecs(static_cast<Eigen::Index>(d), col);
            lsi_docs_[d][c] = sigma * v;
            for (const auto& [term, w] : tfidf_docs_[d]) lsi_basis_[term][c] += w * v / sigma;
        }
    }
}

std::optional<std::size_t> IndexBundle::doc_index(std::string_view doc_id) const {
    auto it = doc_lookup_.find(doc_id);
    if (it == doc_lookup_.end()) return std::nullopt;
    return it->second;
}

std::vector<double> IndexBundle::lsi_project(
    const std::vector<std::pair<std::size_t, double>>& v) const {
    std::vector<double> out(lsi_rank_, 0.0);
    for (const auto& [term, w] : v)
        for (std::size_t c = 0; c < lsi_rank_; ++c) out[c] += w * lsi_basis_[term][c];
    return out;
}

std::vector<std::pair<std::size_t, double>> IndexBundle::tfidf_query_vector(
    std::string_view query) const {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& t : tokenize(query)) {
        auto it = vocabulary_.find(t);
        if (it != vocabulary_.end()) ++counts[it->second];
    }
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& [term, tf] : counts)
        out.emplace_back(term, static_cast<double>(tf) * tfidf_idf_[term]);
    return out;
}

std::vector<double> bm25_scores(const IndexBundle& index, std::string_view query) {
    std::vector<double> scores(index.doc_count(), 0.0);
    const double k1 = index.config().k1;
    const double b = index.config().b;
    const double avgdl = index.avg_doc_length();
    for (const auto& token : tokenize(query)) {
        auto it = index.vocabulary().find(token);
        if (it == index.vocabulary().end()) continue;
        const double idf = index.bm25_idf(it->second);
        for (const auto& p : index.postings(it->second)) {
            const double tf = static_cast<double>(p.tf);
            const double dl = static_cast<double>(index.doc_length(p.doc));
            scores[p.doc] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
    }
    return scores;
}

RankedList search_bm25(const IndexBundle& index, std::string_view query, std::size_t k) {
    const auto scores = bm25_scores(index, query);
    std::vector<RankedEntry> entries;
    for (std::size_t d = 0; d < scores.size(); ++d)
        if (scores[d] > 0.0) entries.push_back({index.doc_ids()[d], scores[d]});
    return top_k(std::move(entries), k, Method::bm25);
}

double tfidf_cosine(const IndexBundle& index, std::string_view query, std::size_t doc) {
    const auto q = index.tfidf_query_vector(query);
    const double qn = sparse_norm(q);
    const auto& d = index.tfidf_doc_vector(doc);
    const double dn = sparse_norm(d);
    if (qn == 0.0 || dn == 0.0) return 0.0;
    return sparse_dot(q, d) / (qn * dn);
}

double tfidf_euclidean(const IndexBundle& index, std::string_view query, std::size_t doc) {
    const auto q = index.tfidf_query_vector(query);
    const auto& d = index.tfidf_doc_vector(doc);
    const double qn = sparse_norm(q), dn = sparse_norm(d);
    return std::sqrt(std::max(0.0, qn * qn + dn * dn - 2.0 * sparse_dot(q, d)));
}

RankedList search_tfidf(const IndexBundle& index, std::string_view query, std::size_t k,
                        Metric metric) {
    const auto q = index.tfidf_query_vector(query);
    const Method method = metric == Metric::cosine ? Method::tfidf_cos : Method::tfidf_euc;
    if (q.empty()) return top_k({}, k, method);
    const double qn = sparse_norm(q);

    std::vector<double> dots(index.doc_count(), 0.0);
    for (const auto& [term, w] : q)
        for (const auto& p : index.postings(term))
            dots[p.doc] += w * static_cast<double>(p.tf) * index.tfidf_idf(term);

    std::vector<RankedEntry> entries;
    for (std::size_t d = 0; d < index.doc_count(); ++d) {
        const double dn = sparse_norm(index.tfidf_doc_vector(d));
        if (metric == Metric::cosine) {
            if (dots[d] > 0.0 && dn > 0.0)
                entries.push_back({index.doc_ids()[d], dots[d] / (qn * dn)});
        } else {
            const double dist = std::sqrt(std::max(0.0, qn * qn + dn * dn - 2.0 * dots[d]));
            entries.push_back({index.doc_ids()[d], 1.0 / (1.0 + dist)});
        }
    }
    return top_k(std::move(entries), k, method);
}

RankedList search_lsi(const IndexBundle& index, std::string_view query, std::size_t k) {
    if (index.doc_count() < 2 || !index.has_lsi())
        fail(Errc::basis_unavailable, "latent basis needs at least two documents");
    const auto q = index.lsi_project(index.tfidf_query_vector(query));
    const double qn = norm(q);
    std::vector<RankedEntry> entries;
    if (qn > 0.0) {
        for (std::size_t d = 0; d < index.doc_count(); ++d) {
            const auto& dv = index.lsi_doc_vector(d);
            const double dn = norm(dv);
            if (dn == 0.0) continue;
            const double sim = dot(q, dv) / (qn * dn);
            if (sim > 1e-9) entries.push_back({index.doc_ids()[d], sim});
        }
    }
    return top_k(std::move(entries), k, Method::lsi);
}

RankedList search_vector(const IndexBundle& index, std::string_view query, std::size_t k) {
    const auto q = index.embedder().embed(query);
    const double qn = norm(q);
    std::vector<RankedEntry> entries;
    if (qn > 0.0) {
        for (std::size_t d = 0; d < index.doc_count(); ++d) {
            const double dn = norm(index.embedding(d));
            const double sim = dn > 0.0 ? dot(q, index.embedding(d)) / (qn * dn) : 0.0;
            entries.push_back({index.doc_ids()[d], sim});
        }
    }
    return top_k(std::move(entries), k, Method::vector);
}

RankedList rerank_mmr(const RankedList& candidates, const IndexBundle& index,
                      std::string_view /*query*/, double lambda, std::size_t k) {
    if (candidates.empty()) fail(Errc::empty_candidates, "no candidates to rerank");
    if (lambda < 0.0 || lambda > 1.0) fail(Errc::invalid_argument, "lambda outside [0, 1]");
    if (k == 0) fail(Errc::invalid_argument, "k must be at least 1");

    const std::size_t n = candidates.size();
    double max_score = 0.0;
    for (const auto& e : candidates.entries) max_score = std::max(max_score, e.score);
    std::vector<double> relevance(n);
    std::vector<const std::vector<double>*> vecs(n, nullptr);
    for (std::size_t i = 0; i < n; ++i) {
        relevance[i] = max_score > 0.0
                           ? candidates.entries[i].score / max_score
                           : 1.0 - static_cast<double>(i) / static_cast<double>(n);
        if (auto d = index.doc_index(candidates.entries[i].doc_id)) vecs[i] = &index.embedding(*d);
    }
    auto similarity = [&](std::size_t a, std::size_t b) {
        if (!vecs[a] || !vecs[b]) return 0.0;
        const double na = norm(*vecs[a]), nb = norm(*vecs[b]);
        return na > 0 && nb > 0 ? dot(*vecs[a], *vecs[b]) / (na * nb) : 0.0;
    };

    std::vector<bool> taken(n, false);
    std::vector<double> max_sim(n, 0.0);
    RankedList out{{}, Method::mmr};
    const std::size_t want = std::min(k, n);
    for (std::size_t step = 0; step < want; ++step) {
        std::size_t best = n;
        double best_value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double value = lambda * relevance[i] - (1.0 - lambda) * max_sim[i];
            if (best == n || value > best_value) {
                best = i;
                best_value = value;
            }
        }
        taken[best] = true;
        // Position-derived score keeps the list ordered by "higher is better".
        out.entries.push_back({candidates.entries[best].doc_id, 1.0 / static_cast<double>(step + 1)});
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i]) max_sim[i] = std::max(max_sim[i], similarity(i, best));
    }
    return out;
}

RankedList fuse_rrf(const RankedList& keyword, const RankedList& vector, std::size_t k,
                    double w_keyword, double w_vector, std::size_t rrf_k) {
    if (w_keyword < 0 || w_vector < 0 || w_keyword + w_vector <= 0.0)
        fail(Errc::invalid_argument, "fusion weights must be non-negative with a positive sum");
    if (rrf_k < 1) fail(Errc::invalid_argument, "rrf_k must be at least 1");
    std::map<std::string, double> fused;
    const double c = static_cast<double>(rrf_k);
    for (std::size_t i = 0; i < keyword.entries.size(); ++i)
        fused[keyword.entries[i].doc_id] += w_keyword / (c + static_cast<double>(i + 1));
    for (std::size_t i = 0; i < vector.entries.size(); ++i)
        fused[vector.entries[i].doc_id] += w_vector / (c + static_cast<double>(i + 1));
    std::vector<RankedEntry> entries;
    for (const auto& [doc, score] : fused)
        if (score > 0.0) entries.push_back({doc, score});
    return top_k(std::move(entries), k, Method::hybrid);
}

RankedList search_hybrid(const IndexBundle& index, std::string_view query, std::size_t k,
                         double w_keyword, double w_vector, std::size_t rrf_k) {
    const std::size_t depth = std::max<std::size_t>(index.doc_count(), 1);
    return fuse_rrf(search_bm25(index, query, depth), search_vector(index, query, depth), k,
                    w_keyword, w_vector, rrf_k);
}

}  // namespace flightrag::retrieval
