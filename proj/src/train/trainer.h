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

#ifndef JRC_TRAIN_TRAINER_H_
#define JRC_TRAIN_TRAINER_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "jpeg/jpeg.h"
#include "model/hyperprior.h"
#include "nn/checkpoint.h"
#include "train/losses.h"
#include "train/tables.h"

namespace jrc::train {

// Two-stage schedule. Stage 1 trains the models alone on coefficients
// quantized by the fixed standard table; stage 2 alternates model epochs
// and table epochs for a number of rounds. `scale` divides every epoch
// count and decay interval for reduced-size runs, preserving the learning
// rate trajectory shape.
struct ScheduleConfig {
  int stage1_epochs = 2000;
  double stage1_lr = 1e-4;
  double stage1_gamma = 0.9;
  int stage1_decay_interval = 500;
  int model_epochs = 50;
  double model_lr = 1e-3;
  double model_gamma = 0.94;
  int model_decay_interval = 1;
  int table_epochs = 30;
  double table_lr = 5e-3;
  double table_gamma = 0.8;
  int table_decay_interval = 1;
  int rounds = 8;
  int batch_size = 16;
  int scale = 1;

  int ScaledStage1Epochs() const;
  int ScaledStage1Interval() const;
  int ScaledModelEpochs() const;
  int ScaledTableEpochs() const;
};

struct TrainConfig {
  model::ModelConfig luma;  // c_in = 64
  model::ModelConfig chroma{/*c_in=*/128, /*n_latent=*/128, /*m_hyper=*/64,
                            /*x_norm=*/64.0};
  ScheduleConfig schedule;
  TradeoffPoint lambda{1.0, 100.0};
  uint64_t seed = 1;
  bool learn_tables = true;  // false freezes tables at init (ablation runs)
  int table_init_quality = 75;

  std::string ToJson() const;
  static TrainConfig FromJson(const std::string& json);
};

// Owns the full training state: both component models, the learned tables,
// and the schedule counters. Deterministic for a fixed (config, corpus).
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // Tiles must share pixel dims, block grids and stored tables.
  void SetCorpus(std::vector<jpeg::JpegImage> tiles);

  void RunStage1();
  void RunStage2();

  // Mean per-pixel L_q over the corpus, deterministic order, no training.
  double EvaluateMeanLq();
  // Mean per-batch model loss in bits per pixel, round relaxation.
  double EvaluateMeanBpp();

  nn::Checkpoint MakeCheckpoint() const;
  void LoadCheckpoint(const nn::Checkpoint& ckpt);

  const std::vector<double>& stage1_history() const {
    return stage1_history_;
  }
  const std::vector<double>& lq_history() const { return lq_history_; }
  model::HyperpriorModel& luma_model() { return *luma_model_; }
  model::HyperpriorModel& chroma_model() { return *chroma_model_; }
  LearnedTables& tables() { return *tables_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  std::vector<std::vector<const jpeg::JpegImage*>> EpochBatches(
      uint64_t epoch_index);
  double RunModelEpoch(double lr, uint64_t epoch_index);
  double RunTableEpoch(double lr, uint64_t epoch_index);
  void CheckFinite(double loss, const char* phase);
  std::vector<nn::Parameter*> ModelParameters();
  std::vector<nn::Parameter*> TableParameters();
  void Snapshot();
  void Restore();

  TrainConfig cfg_;
  std::unique_ptr<model::HyperpriorModel> luma_model_;
  std::unique_ptr<model::HyperpriorModel> chroma_model_;
  std::unique_ptr<LearnedTables> tables_;
  std::vector<jpeg::JpegImage> corpus_;
  std::vector<double> qt_luma_frozen_, qt_chroma_frozen_;  // stage-1 steps
  std::vector<double> stage1_history_;  // epoch mean L_m bits per pixel
  std::vector<double> lq_history_;      // per table epoch, mean L_q per pixel
  std::vector<std::vector<double>> snapshot_;
  uint64_t epoch_counter_ = 0;  // global, drives shuffling
  uint64_t step_counter_ = 0;   // global, drives noise streams
  bool epoch_is_stage2_ = false;
  int rounds_done_ = 0;
};

}  // namespace jrc::train

#endif  // JRC_TRAIN_TRAINER_H_
