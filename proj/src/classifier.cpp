// Copyright 2026 The ViP Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vip/classifier.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "vip/error.hpp"
#include "vip/util.hpp"

namespace vip {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

using SymptomEmbeddings = std::vector<std::vector<EmbeddingSequence>>;

SymptomEmbeddings EmbedSymptoms(const SymptomKnowledgeBase& kb,
                                const std::vector<std::string>& categories,
                                const DualEncoder& encoder) {
  SymptomEmbeddings out;
  out.reserve(categories.size());
  for (const auto& category : categories) {
    const SymptomSet& set = kb.at(category);
    if (set.symptoms.empty()) throw InvalidArgument("category '" + category + "' has no symptoms");
    std::vector<EmbeddingSequence> rows;
    for (const auto& s : set.symptoms) rows.push_back(encoder.embed_tokens(encoder.tokenize(s.text)));
    out.push_back(std::move(rows));
  }
  return out;
}

struct ParamVars {
  ad::Var context;
  ad::Var grouping;
  ad::Var w_q;
  ad::Var w_k;
  ad::Var log_scale;
};

struct Trainable {
  bool context = false;
  bool merge = false;
  bool temperature = false;
};

ParamVars BindParams(ad::Tape& tape, const PromptState& s, Trainable t) {
  auto bind = [&](const Matrix& m, bool trainable) {
    return trainable ? tape.parameter(m) : tape.constant(m);
  };
  Matrix log_scale(1, 1);
  log_scale(0, 0) = s.log_scale;
  return {bind(s.context.tokens, t.context), bind(s.merge.grouping, t.merge),
          bind(s.merge.w_q, t.merge), bind(s.merge.w_k, t.merge), bind(log_scale, t.temperature)};
}

std::vector<ad::Var> BuildTextFeatures(ad::Tape& tape, const ParamVars& vars,
                                       const SymptomEmbeddings& embeddings, const DualEncoder& encoder) {
  std::vector<ad::Var> out;
  out.reserve(embeddings.size());
  for (const auto& category_rows : embeddings) {
    std::vector<ad::Var> feats;
    feats.reserve(category_rows.size());
    for (const auto& emb : category_rows) {
      const ad::Var input = ComposeTextInput(vars.context, tape.constant(emb), encoder.context_limit());
      feats.push_back(encoder.encode_text(tape, input));
    }
    out.push_back(ad::concat_rows(feats));
  }
  return out;
}

struct MergedVars {
  std::vector<ad::Var> reps;     // 1 x d per category (mean/attention)
  std::vector<ad::Var> weights;  // attention only
};

MergedVars MergeAll(const ParamVars& vars, const std::vector<ad::Var>& text, MergeMode mode) {
  MergedVars out;
  if (mode == MergeMode::kMax) return out;
  for (std::size_t c = 0; c < text.size(); ++c) {
    if (mode == MergeMode::kMean) {
      out.reps.push_back(MergeMean(text[c]));
    } else {
      const auto merged = MergeAttention(ad::slice_rows(vars.grouping, static_cast<Eigen::Index>(c), 1),
                                         vars.w_q, vars.w_k, text[c]);
      out.reps.push_back(merged.feature);
      out.weights.push_back(merged.weights);
    }
  }
  return out;
}

// B x N scores of the (already normalized when requested) image rows.
ad::Var BuildScores(ad::Var images, const std::vector<ad::Var>& text, const MergedVars& merged,
                    MergeMode mode, bool normalize) {
  if (mode == MergeMode::kMax) {
    std::vector<ad::Var> cols;
    for (const auto& t : text) {
      const ad::Var rows = normalize ? ad::l2_normalize_rows(t) : t;
      cols.push_back(ad::max_per_row(ad::matmul_nt(images, rows)));
    }
    return ad::concat_cols(cols);
  }
  ad::Var reps = ad::concat_rows(merged.reps);
  if (normalize) reps = ad::l2_normalize_rows(reps);
  return ad::matmul_nt(images, reps);
}

Matrix ImageMatrix(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t end, const DualEncoder& encoder, bool normalize) {
  Matrix out(static_cast<Eigen::Index>(end - begin), encoder.dim());
  for (std::size_t i = begin; i < end; ++i) {
    RowVector f = encoder.encode_image(samples[order[i]].payload);
    if (normalize) {
      const double n = f.norm();
      if (!(n > 0.0)) throw DegenerateFeature("image feature of '" + samples[order[i]].id + "' has zero norm");
      f /= n;
    }
    out.row(static_cast<Eigen::Index>(i - begin)) = f;
  }
  return out;
}

json MatrixJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix MatrixFromJson(const json& j, Eigen::Index cols_if_empty) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) {
      throw ValidationError("checkpoint: ragged matrix", {"matrix"});
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

void ClassifierConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("classifier.temperature", "must be > 0");
  if (epochs < 1) throw ConfigError("classifier.epochs", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("classifier.learning_rate", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("classifier.momentum", "must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("classifier.batch_size", "must be >= 1");
  if (weight_decay < 0.0) throw ConfigError("classifier.weight_decay", "must be >= 0");
  if (context_length < 0) throw ConfigError("classifier.context_length", "must be >= 0");
}

double PromptState::temperature() const { return std::exp(-log_scale); }

bool PromptState::operator==(const PromptState& o) const {
  return context.tokens == o.context.tokens && merge.categories == o.merge.categories &&
         merge.grouping == o.merge.grouping && merge.w_q == o.merge.w_q && merge.w_k == o.merge.w_k &&
         log_scale == o.log_scale && mode == o.mode && learnable_temperature == o.learnable_temperature;
}

PromptState InitPromptState(const std::vector<std::string>& categories, int dim,
                            const ClassifierConfig& cfg) {
  cfg.validate();
  PromptState s;
  s.context = InitContextPrompt(cfg.context_length, dim, cfg.seed, cfg.init);
  s.merge = InitMergePrompt(categories, dim, cfg.seed, cfg.init);
  s.log_scale = -std::log(cfg.temperature);
  s.mode = cfg.merge_mode;
  s.learnable_temperature = cfg.learnable_temperature;
  return s;
}

double ClassScores::at(const std::string& category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return values(static_cast<Eigen::Index>(i));
  }
  throw UnknownCategory(category);
}

int ClassRepresentationSet::index_of(const std::string& category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return static_cast<int>(i);
  }
  throw UnknownCategory(category);
}

ClassRepresentationSet ClassRepresentations(const SymptomKnowledgeBase& kb,
                                            const std::vector<std::string>& categories,
                                            const PromptState& state, const DualEncoder& encoder) {
  for (const auto& c : categories) {
    kb.at(c);
    if (state.mode == MergeMode::kAttention) state.merge.index_of(c);
  }
  ad::Tape tape;
  const ParamVars vars = BindParams(tape, state, {});
  const auto text = BuildTextFeatures(tape, vars, EmbedSymptoms(kb, categories, encoder), encoder);
  ClassRepresentationSet out;
  out.categories = categories;
  out.mode = state.mode;
  for (const auto& t : text) out.text_features.push_back(t.value());
  if (state.mode == MergeMode::kAttention) {
    // Grouping rows follow the merge prompt's own category order.
    ParamVars ordered = vars;
    std::vector<ad::Var> rows;
    for (const auto& c : categories) {
      rows.push_back(ad::slice_rows(vars.grouping, state.merge.index_of(c), 1));
    }
    ordered.grouping = ad::concat_rows(rows);
    const MergedVars merged = MergeAll(ordered, text, state.mode);
    out.representations = Matrix(static_cast<Eigen::Index>(categories.size()), encoder.dim());
    for (std::size_t c = 0; c < categories.size(); ++c) {
      out.representations.row(static_cast<Eigen::Index>(c)) = merged.reps[c].value().row(0);
      out.attention_weights.push_back(merged.weights[c].value().row(0));
    }
  } else if (state.mode == MergeMode::kMean) {
    const MergedVars merged = MergeAll(vars, text, state.mode);
    out.representations = Matrix(static_cast<Eigen::Index>(categories.size()), encoder.dim());
    for (std::size_t c = 0; c < categories.size(); ++c) {
      out.representations.row(static_cast<Eigen::Index>(c)) = merged.reps[c].value().row(0);
    }
  }
  return out;
}

ClassRepresentationSet ZeroShotRepresentations(const SymptomKnowledgeBase& kb,
                                               const std::vector<std::string>& categories,
                                               const DualEncoder& encoder, bool normalize_symptoms) {
  ClassRepresentationSet out;
  out.categories = categories;
  out.mode = MergeMode::kMean;
  out.representations = Matrix(static_cast<Eigen::Index>(categories.size()), encoder.dim());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const SymptomSet& set = kb.at(categories[c]);
    Matrix t(static_cast<Eigen::Index>(set.size()), encoder.dim());
    for (std::size_t i = 0; i < set.size(); ++i) {
      RowVector f = encoder.encode_phrase(set.symptoms[i].text);
      if (normalize_symptoms) {
        if (!(f.norm() > 0.0)) throw DegenerateFeature("symptom feature has zero norm");
        f /= f.norm();
      }
      t.row(static_cast<Eigen::Index>(i)) = f;
    }
    out.representations.row(static_cast<Eigen::Index>(c)) = t.colwise().mean();
    out.text_features.push_back(std::move(t));
  }
  return out;
}

ClassScores ScoreImage(const FeatureVector& image, const ClassRepresentationSet& set,
                       bool normalize_features) {
  const auto n = static_cast<Eigen::Index>(set.categories.size());
  ClassScores out{set.categories, RowVector(n)};
  auto unit = [&](const RowVector& v) -> RowVector {
    if (!normalize_features) return v;
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateFeature("zero-norm feature in class scoring");
    return v / norm;
  };
  const RowVector f = unit(image);
  for (Eigen::Index c = 0; c < n; ++c) {
    if (set.mode == MergeMode::kMax) {
      const TextFeatureMatrix& t = set.text_features[static_cast<std::size_t>(c)];
      if (t.cols() != f.size()) throw InvalidArgument("class_scores: dimension mismatch");
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < t.rows(); ++i) best = std::max(best, f.dot(unit(t.row(i))));
      out.values(c) = best;
    } else {
      if (set.representations.cols() != f.size()) throw InvalidArgument("class_scores: dimension mismatch");
      out.values(c) = f.dot(unit(set.representations.row(c)));
    }
  }
  return out;
}

ClassScores ClassScoresFor(const FeatureVector& image, const ClassRepresentationSet& set,
                           const ClassifierConfig& cfg) {
  return ScoreImage(image, set, cfg.normalize_features);
}

int PredictIndex(const ClassScores& scores) {
  if (scores.values.size() == 0) throw InvalidArgument("predict: empty scores");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.values.size(); ++i) {
    if (scores.values(i) > scores.values(best)) best = i;
  }
  return static_cast<int>(best);
}

std::string Predict(const ClassScores& scores) {
  return scores.categories[static_cast<std::size_t>(PredictIndex(scores))];
}

double CrossEntropyLoss(const ClassScores& scores, const std::string& truth, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("cross_entropy_loss: temperature must be > 0");
  const auto it = std::find(scores.categories.begin(), scores.categories.end(), truth);
  if (it == scores.categories.end()) throw UnknownCategory(truth);
  const Eigen::Index y = it - scores.categories.begin();
  const RowVector logits = scores.values / temperature;
  const double m = logits.maxCoeff();
  return std::log((logits.array() - m).exp().sum()) - (logits(y) - m);
}

double CrossEntropyLoss(const ClassScores& scores, const std::string& truth, const ClassifierConfig& cfg) {
  return CrossEntropyLoss(scores, truth, cfg.temperature);
}

std::string ZeroShotPredict(const FeatureVector& image, const SymptomKnowledgeBase& kb,
                            const std::vector<std::string>& categories, const DualEncoder& encoder,
                            bool normalize_symptoms) {
  return Predict(ScoreImage(image, ZeroShotRepresentations(kb, categories, encoder, normalize_symptoms), true));
}

std::string EpochRecordJson(const EpochRecord& r) {
  const json j = {{"epoch", r.epoch},           {"train_loss", r.train_loss},
                  {"train_acc", r.train_accuracy}, {"val_acc", r.val_accuracy},
                  {"val_loss", r.val_loss},     {"lr", r.learning_rate},
                  {"gamma", r.temperature}};
  return j.dump();
}

LossWithGrads BatchLoss(const PromptState& state, const SymptomKnowledgeBase& kb,
                        const std::vector<std::string>& categories, const DualEncoder& encoder,
                        const Matrix& images, const std::vector<int>& labels, bool normalize_features) {
  ad::Tape tape;
  const ParamVars vars = BindParams(tape, state, {true, true, true});
  const auto text = BuildTextFeatures(tape, vars, EmbedSymptoms(kb, categories, encoder), encoder);
  ad::Var img = tape.constant(images);
  if (normalize_features) img = ad::l2_normalize_rows(img);
  const ad::Var scores = BuildScores(img, text, MergeAll(vars, text, state.mode), state.mode, normalize_features);
  const ad::Var loss = ad::softmax_cross_entropy(ad::scale_by(scores, ad::exp(vars.log_scale)), labels);
  tape.backward(loss);
  return {loss.scalar(), vars.context.grad(), vars.grouping.grad(), vars.w_q.grad(), vars.w_k.grad(),
          vars.log_scale.grad()(0, 0)};
}

TrainState Train(const Dataset& dataset, const SymptomKnowledgeBase& kb, const ClassifierConfig& cfg,
                 const DualEncoder& encoder, const EpochCallback& on_epoch) {
  cfg.validate();
  const std::vector<std::string>& categories = dataset.manifest.categories;
  for (const auto& [id, label] : dataset.manifest.labels) {
    if (!kb.entries.contains(label)) throw UnknownCategory(label);
  }
  for (const auto& c : categories) {
    if (!kb.entries.contains(c)) throw UnknownCategory(c);
  }
  if (dataset.train.empty()) throw InvalidArgument("train: empty training split");
  if (dataset.val.empty()) throw InvalidArgument("train: empty validation split");

  const SymptomEmbeddings embeddings = EmbedSymptoms(kb, categories, encoder);
  PromptState state = InitPromptState(categories, encoder.dim(), cfg);
  const Trainable trainable{cfg.context_length > 0, cfg.merge_mode == MergeMode::kAttention,
                            cfg.learnable_temperature};

  std::vector<std::size_t> val_order(dataset.val.size());
  std::iota(val_order.begin(), val_order.end(), 0);
  const Matrix val_images =
      ImageMatrix(dataset.val, val_order, 0, val_order.size(), encoder, cfg.normalize_features);

  struct Velocity {
    Matrix context, grouping, w_q, w_k;
    double log_scale = 0.0;
  } velocity{Matrix::Zero(state.context.tokens.rows(), state.context.tokens.cols()),
             Matrix::Zero(state.merge.grouping.rows(), state.merge.grouping.cols()),
             Matrix::Zero(encoder.dim(), encoder.dim()), Matrix::Zero(encoder.dim(), encoder.dim())};

  auto step = [&](Matrix& param, Matrix& vel, const Matrix& grad, double lr) {
    vel = cfg.momentum * vel + grad + cfg.weight_decay * param;
    param -= lr * vel;
  };

  TrainState result;
  result.best_val_accuracy = -1.0;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  Rng shuffle_rng(DeriveSeed(cfg.seed, "train-shuffle"));
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.cosine_decay
                          ? 0.5 * cfg.learning_rate * (1.0 + std::cos(kPi * epoch / cfg.epochs))
                          : cfg.learning_rate;
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      std::vector<int> labels;
      for (std::size_t i = begin; i < end; ++i) labels.push_back(dataset.train[order[i]].label);

      ad::Tape tape;
      const ParamVars vars = BindParams(tape, state, trainable);
      const auto text = BuildTextFeatures(tape, vars, embeddings, encoder);
      const ad::Var images =
          tape.constant(ImageMatrix(dataset.train, order, begin, end, encoder, cfg.normalize_features));
      const ad::Var scores =
          BuildScores(images, text, MergeAll(vars, text, state.mode), state.mode, cfg.normalize_features);
      const ad::Var loss =
          ad::softmax_cross_entropy(ad::scale_by(scores, ad::exp(vars.log_scale)), labels);
      tape.backward(loss);

      loss_sum += loss.scalar() * static_cast<double>(end - begin);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        ClassScores row{categories, scores.value().row(static_cast<Eigen::Index>(i))};
        if (PredictIndex(row) == labels[i]) ++correct;
      }
      if (trainable.context) step(state.context.tokens, velocity.context, vars.context.grad(), lr);
      if (trainable.merge) {
        step(state.merge.grouping, velocity.grouping, vars.grouping.grad(), lr);
        step(state.merge.w_q, velocity.w_q, vars.w_q.grad(), lr);
        step(state.merge.w_k, velocity.w_k, vars.w_k.grad(), lr);
      }
      if (trainable.temperature) {
        velocity.log_scale = cfg.momentum * velocity.log_scale + vars.log_scale.grad()(0, 0);
        state.log_scale -= lr * velocity.log_scale;
      }
    }

    const ClassRepresentationSet reps = ClassRepresentations(kb, categories, state, encoder);
    std::size_t val_correct = 0;
    double val_loss = 0.0;
    for (std::size_t i = 0; i < dataset.val.size(); ++i) {
      const ClassScores s = ScoreImage(val_images.row(static_cast<Eigen::Index>(i)), reps, cfg.normalize_features);
      if (PredictIndex(s) == dataset.val[i].label) ++val_correct;
      val_loss += CrossEntropyLoss(s, categories[static_cast<std::size_t>(dataset.val[i].label)],
                                   state.temperature());
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    rec.val_accuracy = static_cast<double>(val_correct) / static_cast<double>(dataset.val.size());
    rec.val_loss = val_loss / static_cast<double>(dataset.val.size());
    rec.learning_rate = lr;
    rec.temperature = state.temperature();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_accuracy > result.best_val_accuracy ||
        (rec.val_accuracy == result.best_val_accuracy && rec.val_loss < result.best_val_loss)) {
      result.best_val_accuracy = rec.val_accuracy;
      result.best_val_loss = rec.val_loss;
      result.best_epoch = rec.epoch;
      result.params = state;
    }
  }
  result.final_params = state;
  result.epochs_run = cfg.epochs;
  return result;
}

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  json grouping = json::object();
  for (std::size_t i = 0; i < ckpt.state.merge.categories.size(); ++i) {
    const RowVector g = ckpt.state.merge.grouping.row(static_cast<Eigen::Index>(i));
    grouping[ckpt.state.merge.categories[i]] = std::vector<double>(g.data(), g.data() + g.size());
  }
  const json j = {{"version", ckpt.version},
                  {"config_digest", ckpt.config_digest},
                  {"encoder_digest", ckpt.encoder_digest},
                  {"normalize_features", ckpt.normalize_features},
                  {"merge_mode", MergeModeName(ckpt.state.mode)},
                  {"categories", ckpt.state.merge.categories},
                  {"dim", ckpt.state.merge.w_q.rows()},
                  {"context_tokens", MatrixJson(ckpt.state.context.tokens)},
                  {"grouping_tokens", grouping},
                  {"w_q", MatrixJson(ckpt.state.merge.w_q)},
                  {"w_k", MatrixJson(ckpt.state.merge.w_k)},
                  {"temperature", {{"log_scale", ckpt.state.log_scale},
                                   {"learnable", ckpt.state.learnable_temperature}}}};
  return j.dump(2) + "\n";
}

Checkpoint ParseCheckpoint(std::string_view text) {
  Checkpoint ckpt;
  try {
    const json j = json::parse(text);
    if (!j.contains("version")) throw ValidationError("checkpoint: missing version", {"version"});
    ckpt.version = j.at("version").get<int>();
    if (ckpt.version != Checkpoint::kVersion) {
      throw ValidationError("checkpoint: unsupported version " + std::to_string(ckpt.version), {"version"});
    }
    ckpt.config_digest = j.at("config_digest").get<std::string>();
    ckpt.encoder_digest = j.at("encoder_digest").get<std::string>();
    ckpt.normalize_features = j.at("normalize_features").get<bool>();
    const auto dim = j.at("dim").get<Eigen::Index>();
    PromptState& s = ckpt.state;
    s.mode = ParseMergeMode(j.at("merge_mode").get<std::string>());
    s.merge.categories = j.at("categories").get<std::vector<std::string>>();
    s.context.tokens = MatrixFromJson(j.at("context_tokens"), dim);
    s.merge.w_q = MatrixFromJson(j.at("w_q"), dim);
    s.merge.w_k = MatrixFromJson(j.at("w_k"), dim);
    s.merge.grouping = Matrix(static_cast<Eigen::Index>(s.merge.categories.size()), dim);
    for (std::size_t i = 0; i < s.merge.categories.size(); ++i) {
      const auto g = j.at("grouping_tokens").at(s.merge.categories[i]).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(g.size()) != dim) {
        throw ValidationError("checkpoint: grouping token width mismatch", {"grouping_tokens." + s.merge.categories[i]});
      }
      for (Eigen::Index c = 0; c < dim; ++c) s.merge.grouping(static_cast<Eigen::Index>(i), c) = g[static_cast<std::size_t>(c)];
    }
    s.log_scale = j.at("temperature").at("log_scale").get<double>();
    s.learnable_temperature = j.at("temperature").at("learnable").get<bool>();
    if (s.merge.w_q.rows() != dim || s.merge.w_q.cols() != dim || s.merge.w_k.rows() != dim ||
        s.merge.w_k.cols() != dim || (s.context.tokens.rows() > 0 && s.context.tokens.cols() != dim)) {
      throw ValidationError("checkpoint: parameter shapes disagree with dim", {"dim"});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint schema violation: ") + e.what(), {"$"});
  }
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw NotFound("checkpoint: " + path.string());
  return ParseCheckpoint(ReadFile(path));
}

}  // namespace vip
