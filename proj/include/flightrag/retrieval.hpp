#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flightrag/flight_store.hpp"

namespace flightrag::retrieval {

enum class Method { bm25, tfidf_cos, tfidf_euc, lsi, vector, hybrid, mmr };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct RankedEntry {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

// Always sorted by score descending, ties by doc_id ascending; doc_ids unique.
struct RankedList {
    std::vector<RankedEntry> entries;
    Method method = Method::bm25;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
    std::vector<std::string> doc_ids() const;
    // 1-based rank of doc_id, or nullopt when absent.
    std::optional<std::size_t> rank_of(std::string_view doc_id) const;
};

// Lowercases, splits on non-alphanumerics, and for mixed letter/digit tokens
// also emits the letter and digit runs ("kl1000" -> "kl1000", "kl", "1000").
std::vector<std::string> tokenize(std::string_view text);

// Pluggable dense text embedder.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

// Signed feature hashing of the token bag, L2-normalised.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 256) : dim_(dimension) {}
    std::size_t dimension() const override { return dim_; }
    std::vector<double> embed(std::string_view text) const override;

private:
    std::size_t dim_;
};

struct IndexConfig {
    double k1 = 1.2;
    double b = 0.75;
    std::size_t lsi_rank = 100;  // 0 disables the latent basis
    std::string embedder = "hashing";
    std::size_t embedding_dim = 256;
    std::shared_ptr<const Embedder> custom_embedder;  // overrides `embedder` when set
};

struct Posting {
    std::size_t doc;
    std::size_t tf;
};

// Immutable set of sub-indexes over one article corpus.
class IndexBundle {
public:
    static IndexBundle build(const std::vector<Article>& articles, const IndexConfig& config = {});

    std::size_t doc_count() const { return doc_ids_.size(); }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const std::string& doc_text(std::size_t doc) const { return doc_texts_[doc]; }
    std::optional<std::size_t> doc_index(std::string_view doc_id) const;

    const std::map<std::string, std::size_t>& vocabulary() const { return vocabulary_; }
    std::size_t doc_length(std::size_t doc) const { return doc_lengths_[doc]; }
    double avg_doc_length() const { return avg_doc_length_; }
    std::size_t doc_frequency(std::size_t term) const { return postings_[term].size(); }
    const std::vector<Posting>& postings(std::size_t term) const { return postings_[term]; }
    // Per-document sparse term counts, sorted by term id.
    const std::vector<std::pair<std::size_t, std::size_t>>& doc_terms(std::size_t doc) const {
        return doc_terms_[doc];
    }

    // BM25 idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
    double bm25_idf(std::size_t term) const { return bm25_idf_[term]; }
    // TF-IDF idf: ln((1 + N) / (1 + df)) + 1.
    double tfidf_idf(std::size_t term) const { return tfidf_idf_[term]; }

    const IndexConfig& config() const { return config_; }
    const Embedder& embedder() const { return *embedder_; }
    const std::vector<double>& embedding(std::size_t doc) const { return embeddings_[doc]; }

    bool has_lsi() const { return lsi_rank_ > 0; }
    std::size_t lsi_rank() const { return lsi_rank_; }
    // Singular values of the term-document TF-IDF matrix, descending (all of them,
    // not only the retained rank).
    const std::vector<double>& singular_values() const { return singular_values_; }
    // Projection of a sparse tf-idf vector onto the retained latent basis.
    std::vector<double> lsi_project(const std::vector<std::pair<std::size_t, double>>& v) const;
    const std::vector<double>& lsi_doc_vector(std::size_t doc) const { return lsi_docs_[doc]; }

    // Query tf-idf vector (sparse, term-sorted); unknown terms dropped.
    std::vector<std::pair<std::size_t, double>> tfidf_query_vector(std::string_view query) const;
    const std::vector<std::pair<std::size_t, double>>& tfidf_doc_vector(std::size_t doc) const {
        return tfidf_docs_[doc];
    }

private:
    IndexConfig config_;
    std::vector<std::string> doc_ids_;
    std::vector<std::string> doc_texts_;
    std::map<std::string, std::size_t> vocabulary_;
    std::map<std::string, std::size_t, std::less<>> doc_lookup_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> doc_terms_;
    std::vector<std::size_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::vector<double> bm25_idf_;
    std::vector<double> tfidf_idf_;
    std::vector<std::vector<std::pair<std::size_t, double>>> tfidf_docs_;
    std::vector<double> tfidf_norms_;
    std::shared_ptr<const Embedder> embedder_;
    std::vector<std::vector<double>> embeddings_;
    std::size_t lsi_rank_ = 0;
    std::vector<double> singular_values_;
    std::vector<std::vector<double>> lsi_basis_;  // per term: r coefficients
    std::vector<std::vector<double>> lsi_docs_;

    void build_lsi();
};

enum class Metric { cosine, euclidean };

// Raw scores over every document, in corpus order (used by oracles and fusion).
std::vector<double> bm25_scores(const IndexBundle& index, std::string_view query);
double tfidf_cosine(const IndexBundle& index, std::string_view query, std::size_t doc);
double tfidf_euclidean(const IndexBundle& index, std::string_view query, std::size_t doc);

RankedList search_bm25(const IndexBundle& index, std::string_view query, std::size_t k);
RankedList search_tfidf(const IndexBundle& index, std::string_view query, std::size_t k,
                        Metric metric);
RankedList search_lsi(const IndexBundle& index, std::string_view query, std::size_t k);
RankedList search_vector(const IndexBundle& index, std::string_view query, std::size_t k);
RankedList rerank_mmr(const RankedList& candidates, const IndexBundle& index,
                      std::string_view query, double lambda, std::size_t k);
RankedList search_hybrid(const IndexBundle& index, std::string_view query, std::size_t k,
                         double w_keyword, double w_vector, std::size_t rrf_k = 60);

// Weighted reciprocal rank fusion of two ranked lists. Entries absent from a
// list contribute zero from it; zero-score documents are dropped.
RankedList fuse_rrf(const RankedList& keyword, const RankedList& vector, std::size_t k,
                    double w_keyword, double w_vector, std::size_t rrf_k);

}  // namespace flightrag::retrieval
