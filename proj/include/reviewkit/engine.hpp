#pragma once

// Wires the catalog, cold-start fallbacks, generation backends and sessions
// into one object shared by the HTTP service and the CLI.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "reviewkit/backend.hpp"
#include "reviewkit/catalog.hpp"
#include "reviewkit/data.hpp"
#include "reviewkit/generation.hpp"
#include "reviewkit/session.hpp"
#include "reviewkit/similarity.hpp"

namespace reviewkit {

struct EngineConfig {
  std::optional<std::filesystem::path> data_dir;  // in-memory when empty
  bool seed_bundled = true;                       // bundled product types and catalog
  std::vector<catalog::Provenance> fallback_order{catalog::Provenance::similar_pt, catalog::Provenance::description,
                                                  catalog::Provenance::llm};
  std::size_t max_topics = 10;
  std::size_t similar_k = 10;
  double alpha = 0.5;
  generation::ValidationLimits limits{};
  double generic_fraction = 0.25;
};

/// Prompt asking a backend for the review topics of an unseen product type.
inline std::string llm_topics_prompt(const catalog::ProductType& pt, std::size_t k) {
  return "List the " + std::to_string(k) +
         " most important topics customers discuss in reviews of the product type \"" + pt.name +
         "\". Answer with short topic names only, one per line.";
}

class Engine {
 public:
  Engine(EngineConfig config, std::unique_ptr<GenerationBackend> backend,
         std::unique_ptr<GenerationBackend> fallback = nullptr)
      : config_(std::move(config)),
        catalog_(config_.data_dir ? catalog::CatalogService(*config_.data_dir) : catalog::CatalogService()),
        backend_(std::move(backend)),
        fallback_(std::move(fallback)) {
    if (!backend_) throw InvalidArgument("engine needs a generation backend");
    if (config_.seed_bundled) {
      catalog::TopicCatalog missing;
      const auto current = catalog_.snapshot();
      for (const auto& [pt, topics] : data::bundled_catalog().entries)
        if (!current->find(pt)) missing.entries[pt] = topics;
      if (!missing.entries.empty()) catalog_.import(missing);
    }
    session::SessionDeps deps;
    deps.resolve_topics = [this](const std::string& pt) { return topics(pt, true); };
    deps.vocabulary = [this](const std::string& pt, const std::string& name, const std::vector<std::string>& req) {
      return generation::build_topic_vocabulary(*catalog_.snapshot(), pt, name, req, config_.generic_fraction);
    };
    deps.alpha = config_.alpha;
    deps.suggest.limits = config_.limits;
    deps.suggest.fallback = fallback_.get();
    std::optional<std::filesystem::path> journal;
    if (config_.data_dir) journal = *config_.data_dir / "sessions.jsonl";
    sessions_ = std::make_unique<session::SessionManager>(std::move(deps), journal);
  }

  catalog::CatalogService& catalog() { return catalog_; }
  session::SessionManager& sessions() { return *sessions_; }
  GenerationBackend& backend() { return *backend_; }
  GenerationBackend* fallback() { return fallback_.get(); }
  const EngineConfig& config() const { return config_; }

  /// Bundled product types overlaid by registered ones (same id wins).
  std::vector<catalog::ProductType> product_types() const {
    std::map<std::string, catalog::ProductType> by_id;
    if (config_.seed_bundled)
      for (const auto& pt : data::bundled_product_types()) by_id[pt.id] = pt;
    for (auto& pt : catalog_.with_store([](const catalog::ReviewStore& s) { return s.product_types(); }))
      by_id[pt.id] = pt;
    std::vector<catalog::ProductType> out;
    for (auto& [_, pt] : by_id) out.push_back(std::move(pt));
    return out;
  }

  std::optional<catalog::ProductType> product_type(const std::string& id) const {
    for (auto& pt : product_types())
      if (pt.id == id || text::casefold(pt.name) == text::casefold(id)) return pt;
    return std::nullopt;
  }

  catalog::TopicLookupResult topics(const std::string& pt_id, bool allow_fallback) {
    const auto pt = product_type(pt_id);
    const auto snapshot = catalog_.snapshot();
    const std::string id = pt ? pt->id : pt_id;
    return catalog::topics_for(*snapshot, pt, id, allow_fallback, fallbacks(*snapshot), config_.max_topics);
  }

  std::vector<similarity::ScoredProductType> similar(const std::string& pt_id, similarity::SimilarityMethod method) {
    const auto pt = product_type(pt_id);
    if (!pt) throw NotFound("unknown product type '" + pt_id + "'");
    const auto embedder = fitted_embedder();
    similarity::SimilarityContext ctx{embedder.get(), backend_.get()};
    if (method.kind == similarity::MethodKind::llm) {
      try {
        return similarity::similar_product_types(*pt, method, product_types(), ctx);
      } catch (const BackendError&) {
        if (!fallback_) throw;
        ctx.backend = fallback_.get();
        return similarity::similar_product_types(*pt, method, product_types(), ctx);
      }
    }
    return similarity::similar_product_types(*pt, method, product_types(), ctx);
  }

  generation::SuggestResult suggest(const std::string& pt_id, const std::string& product_name,
                                    const std::vector<generation::TopicRating>& ratings) {
    const auto pt = product_type(pt_id);
    const std::string name = pt ? pt->name : pt_id;
    std::vector<std::string> requested;
    for (const auto& r : ratings) requested.push_back(r.topic);
    const auto snapshot = catalog_.snapshot();
    const auto vocabulary =
        generation::build_topic_vocabulary(*snapshot, pt ? pt->id : pt_id, product_name, requested, config_.generic_fraction);
    generation::SuggestOptions opts;
    opts.limits = config_.limits;
    opts.fallback = fallback_.get();
    if (const auto* topics = snapshot->find(pt ? pt->id : pt_id)) opts.synonyms = generation::synonyms_from_topics(*topics);
    return generation::suggest(name, product_name, ratings, *backend_, vocabulary, opts);
  }

 private:
  std::shared_ptr<const similarity::TfidfEmbedder> fitted_embedder() {
    const auto types = product_types();
    std::lock_guard lock(embedder_mutex_);
    if (!embedder_ || embedder_size_ != types.size()) {
      std::vector<std::string> names;
      for (const auto& pt : types) names.push_back(pt.name);
      embedder_ = std::make_shared<const similarity::TfidfEmbedder>(names);
      embedder_size_ = types.size();
    }
    return embedder_;
  }

  std::vector<catalog::FallbackSource> fallbacks(const catalog::TopicCatalog& snapshot) {
    std::vector<catalog::FallbackSource> out;
    for (auto p : config_.fallback_order) {
      switch (p) {
        case catalog::Provenance::similar_pt:
          out.push_back({p, [this, &snapshot](const catalog::ProductType& pt) -> std::optional<catalog::TopicLookupResult> {
                           std::vector<catalog::ProductType> scope;
                           for (const auto& c : product_types())
                             if (c.id != pt.id && snapshot.find(c.id) && !snapshot.find(c.id)->empty()) scope.push_back(c);
                           const auto embedder = fitted_embedder();
                           similarity::SimilarityMethod m{similarity::MethodKind::cosine, 0.5, config_.similar_k};
                           const auto ranked = similarity::similar_product_types(pt, m, scope, {embedder.get(), nullptr});
                           if (ranked.empty() || ranked.front().score <= 0.0) return std::nullopt;
                           catalog::TopicLookupResult r;
                           for (auto t : *snapshot.find(ranked.front().id)) {
                             t.source = catalog::TopicSource::similar_pt;
                             r.topics.push_back(std::move(t));
                           }
                           r.detail = "topics borrowed from '" + ranked.front().name + "'";
                           return r;
                         }});
          break;
        case catalog::Provenance::description:
          out.push_back({p, [](const catalog::ProductType& pt) -> std::optional<catalog::TopicLookupResult> {
                           catalog::TopicLookupResult r;
                           r.topics = catalog::extract_topics_from_description(pt.description);
                           if (r.topics.empty()) return std::nullopt;
                           r.detail = "topics extracted from the product type description";
                           return r;
                         }});
          break;
        case catalog::Provenance::llm:
          out.push_back({p, [this](const catalog::ProductType& pt) -> std::optional<catalog::TopicLookupResult> {
                           const auto answer = backend_->complete(llm_topics_prompt(pt, config_.max_topics), 0);
                           catalog::TopicLookupResult r;
                           std::size_t support = config_.max_topics;
                           for (const auto& label : similarity::split_label_list(answer)) {
                             if (text::word_count(label) > 4) continue;
                             r.topics.push_back(catalog::make_topic(label, {}, support > 0 ? support-- : 0,
                                                                    catalog::TopicSource::llm));
                           }
                           r.topics = catalog::rank_topics(std::move(r.topics));
                           if (r.topics.empty()) return std::nullopt;
                           r.detail = "topics suggested by the generation backend";
                           return r;
                         }});
          break;
        case catalog::Provenance::catalog: break;
      }
    }
    return out;
  }

  EngineConfig config_;
  catalog::CatalogService catalog_;
  std::unique_ptr<GenerationBackend> backend_;
  std::unique_ptr<GenerationBackend> fallback_;
  std::unique_ptr<session::SessionManager> sessions_;
  std::mutex embedder_mutex_;
  std::shared_ptr<const similarity::TfidfEmbedder> embedder_;
  std::size_t embedder_size_ = 0;
};

}  // namespace reviewkit
