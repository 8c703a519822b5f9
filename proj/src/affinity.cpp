#include "crowdflow/affinity.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "crowdflow/errors.hpp"
#include "crowdflow/rng.hpp"

namespace crowdflow {

namespace {

using nlohmann::json;

int sample_discrete(const std::vector<double>& weights, double total, Rng& rng) {
  double u = uniform_double(rng) * total;
  const int n = static_cast<int>(weights.size());
  for (int k = 0; k < n; ++k) {
    u -= weights[static_cast<std::size_t>(k)];
    if (u < 0.0) return k;
  }
  return n - 1;
}

std::uint64_t document_hash(const CategoryDocument& doc) {
  std::uint64_t h = fnv1a(std::int64_t(doc.tokens.size()));
  for (const std::string& t : doc.tokens) h = fnv1a(t, h);
  return h;
}

}  // namespace

CategoryDocument worker_document(const std::string& worker_id, const History& history) {
  CategoryDocument doc;
  doc.owner = worker_id;
  for (const HistoryRecord& rec : history) {
    doc.tokens.insert(doc.tokens.end(), rec.categories.begin(), rec.categories.end());
  }
  std::sort(doc.tokens.begin(), doc.tokens.end());
  return doc;
}

DocumentSet build_documents(const HistoryMap& histories, const std::vector<SpatialTask>& tasks) {
  DocumentSet out;
  for (const auto& [worker_id, history] : histories) {
    CategoryDocument doc = worker_document(worker_id, history);
    if (doc.tokens.empty()) {
      ++out.workers_without_history;
      continue;
    }
    out.worker_docs.push_back(std::move(doc));
  }
  for (const SpatialTask& task : tasks) {
    CategoryDocument doc;
    doc.owner = task.id;
    doc.tokens.assign(task.categories.begin(), task.categories.end());
    out.task_docs.push_back(std::move(doc));
  }
  return out;
}

TopicModel train_topic_model(const std::vector<CategoryDocument>& documents,
                             const TrainOptions& options) {
  if (documents.empty()) throw std::invalid_argument("cannot train a topic model on zero documents");
  if (options.num_topics < 1) throw std::invalid_argument("num_topics must be >= 1");
  if (options.iterations < 1) throw std::invalid_argument("iterations must be >= 1");

  TopicModel model;
  model.num_topics = options.num_topics;
  model.alpha = options.alpha > 0.0 ? options.alpha : 50.0 / options.num_topics;
  model.beta = options.beta > 0.0 ? options.beta : 0.01;
  model.seed = options.seed;
  model.train_sweeps = options.iterations;
  model.infer_sweeps = options.infer_iterations;

  std::set<std::string> vocab;
  for (const CategoryDocument& doc : documents) {
    if (doc.tokens.empty()) throw std::invalid_argument("training document with no tokens: " + doc.owner);
    vocab.insert(doc.tokens.begin(), doc.tokens.end());
  }
  model.vocabulary.assign(vocab.begin(), vocab.end());
  for (std::size_t i = 0; i < model.vocabulary.size(); ++i) {
    model.vocab_index.emplace(model.vocabulary[i], static_cast<int>(i));
  }
  if (static_cast<int>(model.vocabulary.size()) < model.num_topics) {
    std::cerr << "warning: vocabulary size " << model.vocabulary.size()
              << " is below the topic count " << model.num_topics << '\n';
  }

  const int K = model.num_topics;
  const int V = model.vocab_size();
  const std::size_t D = documents.size();

  std::vector<std::vector<int>> tokens(D);   // token ids per document
  for (std::size_t d = 0; d < D; ++d) {
    tokens[d].reserve(documents[d].tokens.size());
    for (const std::string& t : documents[d].tokens) {
      tokens[d].push_back(model.vocab_index.at(t));
    }
  }

  std::vector<std::vector<int>> topic_of(D);     // z assignments
  std::vector<std::vector<int>> doc_topic(D, std::vector<int>(static_cast<std::size_t>(K), 0));
  std::vector<std::vector<int>> term_topic(static_cast<std::size_t>(K),
                                           std::vector<int>(static_cast<std::size_t>(V), 0));
  std::vector<int> topic_total(static_cast<std::size_t>(K), 0);

  Rng rng(derive_seed(options.seed, 0x7261696e));  // training chain

  for (std::size_t d = 0; d < D; ++d) {
    topic_of[d].resize(tokens[d].size());
    for (std::size_t i = 0; i < tokens[d].size(); ++i) {
      const int k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
      topic_of[d][i] = k;
      ++doc_topic[d][static_cast<std::size_t>(k)];
      ++term_topic[static_cast<std::size_t>(k)][static_cast<std::size_t>(tokens[d][i])];
      ++topic_total[static_cast<std::size_t>(k)];
    }
  }

  const double alpha = model.alpha;
  const double beta = model.beta;
  const double vbeta = V * beta;
  std::vector<double> weights(static_cast<std::size_t>(K), 0.0);

  for (int sweep = 0; sweep < options.iterations; ++sweep) {
    for (std::size_t d = 0; d < D; ++d) {
      for (std::size_t i = 0; i < tokens[d].size(); ++i) {
        const int v = tokens[d][i];
        const int old_k = topic_of[d][i];
        --doc_topic[d][static_cast<std::size_t>(old_k)];
        --term_topic[static_cast<std::size_t>(old_k)][static_cast<std::size_t>(v)];
        --topic_total[static_cast<std::size_t>(old_k)];

        double total = 0.0;
        for (int k = 0; k < K; ++k) {
          const auto ks = static_cast<std::size_t>(k);
          const double w = (doc_topic[d][ks] + alpha) *
                           (term_topic[ks][static_cast<std::size_t>(v)] + beta) /
                           (topic_total[ks] + vbeta);
          weights[ks] = w;
          total += w;
        }
        const int new_k = sample_discrete(weights, total, rng);
        topic_of[d][i] = new_k;
        ++doc_topic[d][static_cast<std::size_t>(new_k)];
        ++term_topic[static_cast<std::size_t>(new_k)][static_cast<std::size_t>(v)];
        ++topic_total[static_cast<std::size_t>(new_k)];
      }
    }
  }

  model.topic_term.assign(static_cast<std::size_t>(K),
                          std::vector<double>(static_cast<std::size_t>(V), 0.0));
  for (int k = 0; k < K; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double denom = topic_total[ks] + vbeta;
    for (int v = 0; v < V; ++v) {
      model.topic_term[ks][static_cast<std::size_t>(v)] =
          (term_topic[ks][static_cast<std::size_t>(v)] + beta) / denom;
    }
  }

  model.doc_owners.reserve(D);
  model.doc_topic.reserve(D);
  for (std::size_t d = 0; d < D; ++d) {
    model.doc_owners.push_back(documents[d].owner);
    const double denom = static_cast<double>(tokens[d].size()) + K * alpha;
    std::vector<double> theta(static_cast<std::size_t>(K), 0.0);
    for (int k = 0; k < K; ++k) {
      theta[static_cast<std::size_t>(k)] = (doc_topic[d][static_cast<std::size_t>(k)] + alpha) / denom;
    }
    model.doc_topic.push_back(std::move(theta));
  }
  return model;
}

TopicInference infer_topics(const TopicModel& model, const CategoryDocument& document) {
  if (model.num_topics < 1 || model.topic_term.empty()) {
    throw std::invalid_argument("topic model is not trained");
  }
  if (document.tokens.empty()) throw std::invalid_argument("cannot infer topics of an empty document");

  const int K = model.num_topics;
  TopicInference out;

  std::vector<int> ids;
  ids.reserve(document.tokens.size());
  for (const std::string& t : document.tokens) {
    const auto it = model.vocab_index.find(t);
    if (it == model.vocab_index.end()) {
      ++out.dropped_tokens;
    } else {
      ids.push_back(it->second);
    }
  }
  if (ids.empty()) {
    out.out_of_vocabulary = true;
    out.distribution.assign(static_cast<std::size_t>(K), 1.0 / K);
    return out;
  }

  const int sweeps = std::max(2, model.infer_sweeps);
  const int burn_in = sweeps / 2;
  const double alpha = model.alpha;

  Rng rng(derive_seed(model.seed, document_hash(document)));

  std::vector<int> topic_of(ids.size());
  std::vector<int> doc_topic(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K)));
    topic_of[i] = k;
    ++doc_topic[static_cast<std::size_t>(k)];
  }

  std::vector<double> weights(static_cast<std::size_t>(K), 0.0);
  std::vector<double> accumulated(static_cast<std::size_t>(K), 0.0);
  const double denom = static_cast<double>(ids.size()) + K * alpha;

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int v = ids[i];
      const int old_k = topic_of[i];
      --doc_topic[static_cast<std::size_t>(old_k)];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const double w =
            (doc_topic[ks] + alpha) * model.topic_term[ks][static_cast<std::size_t>(v)];
        weights[ks] = w;
        total += w;
      }
      const int new_k = sample_discrete(weights, total, rng);
      topic_of[i] = new_k;
      ++doc_topic[static_cast<std::size_t>(new_k)];
    }
    if (sweep >= burn_in) {
      for (int k = 0; k < K; ++k) {
        accumulated[static_cast<std::size_t>(k)] +=
            (doc_topic[static_cast<std::size_t>(k)] + alpha) / denom;
      }
    }
  }

  out.distribution.resize(static_cast<std::size_t>(K));
  double total = 0.0;
  for (int k = 0; k < K; ++k) total += accumulated[static_cast<std::size_t>(k)];
  for (int k = 0; k < K; ++k) {
    out.distribution[static_cast<std::size_t>(k)] =
        accumulated[static_cast<std::size_t>(k)] / total;
  }
  return out;
}

double affinity(const TopicModel& model, const CategoryDocument& worker_doc,
                const CategoryDocument& task_doc) {
  const auto a = infer_topics(model, worker_doc);
  const auto b = infer_topics(model, task_doc);
  return std::inner_product(a.distribution.begin(), a.distribution.end(),
                            b.distribution.begin(), 0.0);
}

void save_topic_model(const TopicModel& model, const std::string& path) {
  json j;
  j["format"] = "crowdflow-topic-model";
  j["version"] = 1;
  j["num_topics"] = model.num_topics;
  j["alpha"] = model.alpha;
  j["beta"] = model.beta;
  j["seed"] = model.seed;
  j["train_sweeps"] = model.train_sweeps;
  j["infer_sweeps"] = model.infer_sweeps;
  j["vocabulary"] = model.vocabulary;
  j["topic_term"] = model.topic_term;
  j["doc_owners"] = model.doc_owners;
  j["doc_topic"] = model.doc_topic;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write topic model: " + path);
  out << j.dump();
}

TopicModel load_topic_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topic model: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("invalid topic model file " + path + ": " + e.what());
  }
  if (j.value("format", "") != "crowdflow-topic-model" || j.value("version", 0) != 1) {
    throw DataError("unrecognized topic model format: " + path);
  }
  TopicModel model;
  model.num_topics = j.at("num_topics").get<int>();
  model.alpha = j.at("alpha").get<double>();
  model.beta = j.at("beta").get<double>();
  model.seed = j.at("seed").get<std::uint64_t>();
  model.train_sweeps = j.at("train_sweeps").get<int>();
  model.infer_sweeps = j.at("infer_sweeps").get<int>();
  model.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  model.topic_term = j.at("topic_term").get<std::vector<std::vector<double>>>();
  model.doc_owners = j.at("doc_owners").get<std::vector<std::string>>();
  model.doc_topic = j.at("doc_topic").get<std::vector<std::vector<double>>>();
  for (std::size_t i = 0; i < model.vocabulary.size(); ++i) {
    model.vocab_index.emplace(model.vocabulary[i], static_cast<int>(i));
  }
  return model;
}

}  // namespace crowdflow
