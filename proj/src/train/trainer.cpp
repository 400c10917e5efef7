// Copyright (c) the JRC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "train/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "json.hpp"
#include "nn/adam.h"
#include "nn/ops.h"
#include "util/rng.h"

namespace jrc::train {

namespace {

constexpr uint64_t kShuffleStream = 0x7368756666ull;

int ScaleCount(int count, int scale) {
  return std::max(1, count / std::max(1, scale));
}

}  // namespace

int ScheduleConfig::ScaledStage1Epochs() const {
  return ScaleCount(stage1_epochs, scale);
}
int ScheduleConfig::ScaledStage1Interval() const {
  return ScaleCount(stage1_decay_interval, scale);
}
int ScheduleConfig::ScaledModelEpochs() const {
  return ScaleCount(model_epochs, scale);
}
int ScheduleConfig::ScaledTableEpochs() const {
  return ScaleCount(table_epochs, scale);
}

std::string TrainConfig::ToJson() const {
  nlohmann::json j;
  j["luma"] = nlohmann::json::parse(luma.ToJson());
  j["chroma"] = nlohmann::json::parse(chroma.ToJson());
  nlohmann::json s;
  s["stage1_epochs"] = schedule.stage1_epochs;
  s["stage1_lr"] = schedule.stage1_lr;
  s["stage1_gamma"] = schedule.stage1_gamma;
  s["stage1_decay_interval"] = schedule.stage1_decay_interval;
  s["model_epochs"] = schedule.model_epochs;
  s["model_lr"] = schedule.model_lr;
  s["model_gamma"] = schedule.model_gamma;
  s["model_decay_interval"] = schedule.model_decay_interval;
  s["table_epochs"] = schedule.table_epochs;
  s["table_lr"] = schedule.table_lr;
  s["table_gamma"] = schedule.table_gamma;
  s["table_decay_interval"] = schedule.table_decay_interval;
  s["rounds"] = schedule.rounds;
  s["batch_size"] = schedule.batch_size;
  s["scale"] = schedule.scale;
  j["schedule"] = s;
  j["lambda_r"] = lambda.lambda_r;
  j["lambda_d"] = lambda.lambda_d;
  j["seed"] = std::to_string(seed);
  j["learn_tables"] = learn_tables;
  j["table_init_quality"] = table_init_quality;
  return j.dump();
}

TrainConfig TrainConfig::FromJson(const std::string& json) {
  TrainConfig cfg;
  try {
    const nlohmann::json j = nlohmann::json::parse(json);
    cfg.luma = model::ModelConfig::FromJson(j.at("luma").dump());
    cfg.chroma = model::ModelConfig::FromJson(j.at("chroma").dump());
    const nlohmann::json& s = j.at("schedule");
    cfg.schedule.stage1_epochs = s.at("stage1_epochs").get<int>();
    cfg.schedule.stage1_lr = s.at("stage1_lr").get<double>();
    cfg.schedule.stage1_gamma = s.at("stage1_gamma").get<double>();
    cfg.schedule.stage1_decay_interval =
        s.at("stage1_decay_interval").get<int>();
    cfg.schedule.model_epochs = s.at("model_epochs").get<int>();
    cfg.schedule.model_lr = s.at("model_lr").get<double>();
    cfg.schedule.model_gamma = s.at("model_gamma").get<double>();
    cfg.schedule.model_decay_interval = s.at("model_decay_interval").get<int>();
    cfg.schedule.table_epochs = s.at("table_epochs").get<int>();
    cfg.schedule.table_lr = s.at("table_lr").get<double>();
    cfg.schedule.table_gamma = s.at("table_gamma").get<double>();
    cfg.schedule.table_decay_interval = s.at("table_decay_interval").get<int>();
    cfg.schedule.rounds = s.at("rounds").get<int>();
    cfg.schedule.batch_size = s.at("batch_size").get<int>();
    cfg.schedule.scale = s.at("scale").get<int>();
    cfg.lambda.lambda_r = j.at("lambda_r").get<double>();
    cfg.lambda.lambda_d = j.at("lambda_d").get<double>();
    cfg.seed = std::stoull(j.at("seed").get<std::string>());
    cfg.learn_tables = j.at("learn_tables").get<bool>();
    cfg.table_init_quality = j.at("table_init_quality").get<int>();
  } catch (const nlohmann::json::exception& e) {
    Check(false, ErrorKind::kFormat,
          std::string("bad training config: ") + e.what());
  }
  Check(cfg.schedule.batch_size > 0 && cfg.schedule.scale > 0 &&
            cfg.schedule.rounds >= 0,
        ErrorKind::kInvalidArgument, "bad schedule constants");
  return cfg;
}

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg) {
  Check(cfg_.luma.c_in == 64 && cfg_.chroma.c_in == 128,
        ErrorKind::kInvalidArgument,
        "component models must use 64 luma / 128 chroma channels");
  luma_model_ = std::make_unique<model::HyperpriorModel>(cfg_.luma, "luma",
                                                         cfg_.seed);
  chroma_model_ = std::make_unique<model::HyperpriorModel>(cfg_.chroma,
                                                           "chroma", cfg_.seed);
  const jpeg::QuantTable ql =
      jpeg::IjgScaleTable(jpeg::AnnexKLumaQuant(), cfg_.table_init_quality);
  const jpeg::QuantTable qc =
      jpeg::IjgScaleTable(jpeg::AnnexKChromaQuant(), cfg_.table_init_quality);
  tables_ = std::make_unique<LearnedTables>(ql, qc);
  const auto nl = ql.NaturalOrder();
  const auto nc = qc.NaturalOrder();
  qt_luma_frozen_.assign(nl.begin(), nl.end());
  qt_chroma_frozen_.assign(nc.begin(), nc.end());
}

void Trainer::SetCorpus(std::vector<jpeg::JpegImage> tiles) {
  Check(!tiles.empty(), ErrorKind::kInvalidArgument, "empty corpus");
  corpus_ = std::move(tiles);
}

std::vector<std::vector<const jpeg::JpegImage*>> Trainer::EpochBatches(
    uint64_t epoch_index) {
  std::vector<int> order(corpus_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg_.seed, Rng::Mix(kShuffleStream, epoch_index));
  for (size_t i = order.size(); i > 1; --i) {
    const size_t j = size_t(rng.NextBelow(i));
    std::swap(order[i - 1], order[j]);
  }
  const size_t bs = size_t(cfg_.schedule.batch_size);
  std::vector<std::vector<const jpeg::JpegImage*>> batches;
  for (size_t start = 0; start < order.size(); start += bs) {
    const size_t end = std::min(order.size(), start + bs);
    if (end - start < bs && !batches.empty()) break;  // drop partial tail
    std::vector<const jpeg::JpegImage*> batch;
    for (size_t k = start; k < end; ++k)
      batch.push_back(&corpus_[size_t(order[k])]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<nn::Parameter*> Trainer::ModelParameters() {
  std::vector<nn::Parameter*> out;
  for (nn::Parameter* p : luma_model_->Parameters()) out.push_back(p);
  for (nn::Parameter* p : chroma_model_->Parameters()) out.push_back(p);
  return out;
}

std::vector<nn::Parameter*> Trainer::TableParameters() {
  std::vector<nn::Parameter*> out;
  tables_->CollectParameters(&out);
  return out;
}

void Trainer::Snapshot() {
  snapshot_.clear();
  for (nn::Parameter* p : ModelParameters()) snapshot_.push_back(p->tensor.data());
  for (nn::Parameter* p : TableParameters()) snapshot_.push_back(p->tensor.data());
}

void Trainer::Restore() {
  size_t i = 0;
  for (nn::Parameter* p : ModelParameters()) p->tensor.data() = snapshot_[i++];
  for (nn::Parameter* p : TableParameters()) p->tensor.data() = snapshot_[i++];
}

void Trainer::CheckFinite(double loss, const char* phase) {
  if (std::isfinite(loss)) return;
  Restore();
  Check(false, ErrorKind::kNumeric,
        std::string("non-finite loss in ") + phase +
            "; parameters rolled back to the last finite epoch");
}

double Trainer::RunModelEpoch(double lr, uint64_t epoch_index) {
  Snapshot();
  // Forward tables are frozen values for this whole epoch.
  std::vector<double> ql = qt_luma_frozen_, qc = qt_chroma_frozen_;
  if (epoch_is_stage2_) {
    ql = tables_->QtLuma().data();
    qc = tables_->QtChroma().data();
  }
  auto params = ModelParameters();
  nn::AdamConfig adam;
  adam.lr = lr;
  double bit_sum = 0.0;
  int64_t pixel_sum = 0;
  for (auto& batch : EpochBatches(epoch_index)) {
    const CoeffBatch cb = MakeCoeffBatch(batch);
    const nn::Tensor loss = LossModel(*luma_model_, *chroma_model_, cb, ql, qc,
                                      cfg_.seed, step_counter_++);
    bit_sum += loss.scalar();
    pixel_sum += cb.pixel_count;
    CheckFinite(loss.scalar(), "model epoch");
    nn::Backward(loss);
    nn::AdamStep(params, adam);
  }
  return bit_sum / double(pixel_sum);
}

double Trainer::RunTableEpoch(double lr, uint64_t epoch_index) {
  Snapshot();
  auto params = TableParameters();
  nn::AdamConfig adam;
  adam.lr = lr;
  double lq_sum = 0.0;
  int batches = 0;
  for (auto& batch : EpochBatches(epoch_index)) {
    const CoeffBatch cb = MakeCoeffBatch(batch);
    RdParts parts =
        LossRd(*luma_model_, *chroma_model_, cb, *tables_, cfg_.lambda);
    lq_sum += parts.lq_per_pixel;
    ++batches;
    CheckFinite(parts.lq_per_pixel, "table epoch");
    nn::Backward(parts.loss);
    nn::AdamStep(params, adam);
  }
  return lq_sum / std::max(1, batches);
}

void Trainer::RunStage1() {
  Check(!corpus_.empty(), ErrorKind::kInvalidArgument, "corpus not set");
  epoch_is_stage2_ = false;
  const int epochs = cfg_.schedule.ScaledStage1Epochs();
  const int interval = cfg_.schedule.ScaledStage1Interval();
  for (int e = 0; e < epochs; ++e) {
    const double lr = nn::LrDecay(cfg_.schedule.stage1_lr,
                                  cfg_.schedule.stage1_gamma, interval, e);
    stage1_history_.push_back(RunModelEpoch(lr, epoch_counter_++));
    // Converged runs stop early: relative improvement under 1e-4 across a
    // 20-epoch window.
    const size_t n = stage1_history_.size();
    if (n >= 21) {
      const double prev = stage1_history_[n - 21];
      if (std::fabs(prev - stage1_history_[n - 1]) < 1e-4 * std::fabs(prev))
        break;
    }
  }
}

void Trainer::RunStage2() {
  Check(!corpus_.empty(), ErrorKind::kInvalidArgument, "corpus not set");
  for (int round = 0; round < cfg_.schedule.rounds; ++round) {
    epoch_is_stage2_ = true;
    for (int e = 0; e < cfg_.schedule.ScaledModelEpochs(); ++e) {
      const double lr =
          nn::LrDecay(cfg_.schedule.model_lr, cfg_.schedule.model_gamma,
                      cfg_.schedule.model_decay_interval, e);
      RunModelEpoch(lr, epoch_counter_++);
    }
    if (cfg_.learn_tables) {
      for (int e = 0; e < cfg_.schedule.ScaledTableEpochs(); ++e) {
        const double lr =
            nn::LrDecay(cfg_.schedule.table_lr, cfg_.schedule.table_gamma,
                        cfg_.schedule.table_decay_interval, e);
        lq_history_.push_back(RunTableEpoch(lr, epoch_counter_++));
      }
    }
    ++rounds_done_;
  }
}

double Trainer::EvaluateMeanLq() {
  Check(!corpus_.empty(), ErrorKind::kInvalidArgument, "corpus not set");
  double bits = 0.0, dist_weighted = 0.0;
  int64_t pixels = 0;
  const size_t bs = size_t(cfg_.schedule.batch_size);
  for (size_t start = 0; start < corpus_.size(); start += bs) {
    std::vector<const jpeg::JpegImage*> batch;
    for (size_t k = start; k < std::min(corpus_.size(), start + bs); ++k)
      batch.push_back(&corpus_[k]);
    const CoeffBatch cb = MakeCoeffBatch(batch);
    RdParts parts =
        LossRd(*luma_model_, *chroma_model_, cb, *tables_, cfg_.lambda);
    bits += parts.rate_bits;
    dist_weighted += parts.distortion * double(cb.pixel_count);
    pixels += cb.pixel_count;
  }
  return cfg_.lambda.lambda_r * bits / double(pixels) +
         cfg_.lambda.lambda_d * dist_weighted / double(pixels);
}

double Trainer::EvaluateMeanBpp() {
  Check(!corpus_.empty(), ErrorKind::kInvalidArgument, "corpus not set");
  double bits = 0.0;
  int64_t pixels = 0;
  const size_t bs = size_t(cfg_.schedule.batch_size);
  for (size_t start = 0; start < corpus_.size(); start += bs) {
    std::vector<const jpeg::JpegImage*> batch;
    for (size_t k = start; k < std::min(corpus_.size(), start + bs); ++k)
      batch.push_back(&corpus_[k]);
    const CoeffBatch cb = MakeCoeffBatch(batch);
    const QuantizedBatch q =
        QuantizeBatch(cb, tables_->QtLuma(), tables_->QtChroma());
    model::RateTensors rl =
        luma_model_->Rate(q.x_luma, model::Relaxation::kRound, 0, 0);
    model::RateTensors rc =
        chroma_model_->Rate(q.x_chroma, model::Relaxation::kRound, 0, 0);
    bits += rl.bits_x.scalar() + rl.bits_y.scalar() + rl.bits_z.scalar() +
            rc.bits_x.scalar() + rc.bits_y.scalar() + rc.bits_z.scalar();
    pixels += cb.pixel_count;
  }
  return bits / double(pixels);
}

nn::Checkpoint Trainer::MakeCheckpoint() const {
  nn::Checkpoint ckpt;
  nlohmann::json j;
  j["train_config"] = nlohmann::json::parse(cfg_.ToJson());
  j["epoch_counter"] = epoch_counter_;
  j["rounds_done"] = rounds_done_;
  ckpt.config_json = j.dump();
  std::vector<nn::Parameter*> all;
  for (nn::Parameter* p : const_cast<Trainer*>(this)->ModelParameters())
    all.push_back(p);
  for (nn::Parameter* p : const_cast<Trainer*>(this)->TableParameters())
    all.push_back(p);
  nn::ExportParameters(all, &ckpt.params);
  return ckpt;
}

void Trainer::LoadCheckpoint(const nn::Checkpoint& ckpt) {
  try {
    const nlohmann::json j = nlohmann::json::parse(ckpt.config_json);
    const TrainConfig stored =
        TrainConfig::FromJson(j.at("train_config").dump());
    Check(stored.ToJson() == cfg_.ToJson(), ErrorKind::kModelMismatch,
          "checkpoint was trained under a different configuration");
    epoch_counter_ = j.at("epoch_counter").get<uint64_t>();
    rounds_done_ = j.at("rounds_done").get<int>();
  } catch (const nlohmann::json::exception& e) {
    Check(false, ErrorKind::kFormat,
          std::string("bad checkpoint config: ") + e.what());
  }
  std::vector<nn::Parameter*> all;
  for (nn::Parameter* p : ModelParameters()) all.push_back(p);
  for (nn::Parameter* p : TableParameters()) all.push_back(p);
  nn::ImportParameters(all, ckpt.params);
}

}  // namespace jrc::train
