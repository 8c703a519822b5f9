#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdflow/core.hpp"
#include "crowdflow/ingest.hpp"

namespace crowdflow {

// A bag of category tokens owned by a worker or task.
struct CategoryDocument {
  std::string owner;
  std::vector<std::string> tokens;  // sorted multiset; nonempty when used
};

struct DocumentSet {
  std::vector<CategoryDocument> worker_docs;
  std::vector<CategoryDocument> task_docs;
  std::size_t workers_without_history = 0;
};

// One document per worker (categories of performed tasks, with multiplicity)
// and one per task (its category set). Workers whose history yields no
// tokens get no document and are counted.
DocumentSet build_documents(const HistoryMap& histories,
                            const std::vector<SpatialTask>& tasks);

// A single worker's category document; tokens may be empty.
CategoryDocument worker_document(const std::string& worker_id, const History& history);

// Collapsed-Gibbs topic model over category tokens. Training is a
// sequential chain, so a fixed seed reproduces the model bit for bit.
struct TopicModel {
  int num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int train_sweeps = 0;
  int infer_sweeps = 0;
  std::vector<std::string> vocabulary;            // sorted
  std::unordered_map<std::string, int> vocab_index;
  std::vector<std::vector<double>> topic_term;    // K x V, rows sum to 1
  std::vector<std::string> doc_owners;            // training documents
  std::vector<std::vector<double>> doc_topic;     // per training document

  int vocab_size() const { return static_cast<int>(vocabulary.size()); }
};

struct TrainOptions {
  int num_topics = 50;
  double alpha = -1.0;   // <= 0 selects 50 / num_topics
  double beta = 0.01;
  int iterations = 1000;
  int infer_iterations = 100;
  std::uint64_t seed = 1;
};

TopicModel train_topic_model(const std::vector<CategoryDocument>& documents,
                             const TrainOptions& options);

struct TopicInference {
  std::vector<double> distribution;  // sums to 1
  std::size_t dropped_tokens = 0;    // out-of-vocabulary tokens ignored
  bool out_of_vocabulary = false;    // nothing inferable -> uniform fallback
};

// Gibbs inference with the trained topic-term distribution frozen. The
// chain seed derives from the model seed and the document content, so the
// result is a pure function of (model, document).
TopicInference infer_topics(const TopicModel& model, const CategoryDocument& document);

// Dot product of the two inferred topic distributions; in [0, 1].
double affinity(const TopicModel& model, const CategoryDocument& worker_doc,
                const CategoryDocument& task_doc);

void save_topic_model(const TopicModel& model, const std::string& path);
TopicModel load_topic_model(const std::string& path);

}  // namespace crowdflow
