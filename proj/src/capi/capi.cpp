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

#include "jrc/jrc.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "codec/codec.h"
#include "eval/corpus.h"
#include "eval/sweep.h"
#include "jpeg/jpeg.h"
#include "json.hpp"
#include "nn/checkpoint.h"
#include "train/trainer.h"
#include "util/bytes.h"
#include "util/error.h"

struct jrc_model_t {
  std::unique_ptr<jrc::codec::CodecModel> impl;
};

namespace {

thread_local std::string g_last_error;

jrc_status StatusFromKind(jrc::ErrorKind kind) {
  using jrc::ErrorKind;
  switch (kind) {
    case ErrorKind::kIo: return JRC_ERR_IO;
    case ErrorKind::kFormat: return JRC_ERR_FORMAT;
    case ErrorKind::kUnsupported: return JRC_ERR_UNSUPPORTED;
    case ErrorKind::kCorrupt: return JRC_ERR_CORRUPT;
    case ErrorKind::kModelMismatch: return JRC_ERR_MODEL_MISMATCH;
    case ErrorKind::kInvalidArgument: return JRC_ERR_INVALID_ARGUMENT;
    case ErrorKind::kNumeric: return JRC_ERR_NUMERIC;
    case ErrorKind::kInternal: return JRC_ERR_INTERNAL;
  }
  return JRC_ERR_INTERNAL;
}

template <typename Fn>
jrc_status Run(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return JRC_OK;
  } catch (const jrc::Error& e) {
    g_last_error = e.what();
    return StatusFromKind(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return JRC_ERR_INTERNAL;
  }
}

jrc_status Fail(jrc_status status, const char* message) {
  g_last_error = message;
  return status;
}

// Out-buffers cross the C boundary, so they use malloc and pair with
// jrc_buffer_free.
void* CopyOut(const void* data, size_t size) {
  void* p = std::malloc(size ? size : 1);
  jrc::Check(p != nullptr, jrc::ErrorKind::kInternal, "out of memory");
  std::memcpy(p, data, size);
  return p;
}

std::unique_ptr<jrc::codec::CodecModel> LoadModelFile(const std::string& path) {
  const std::vector<uint8_t> bytes = jrc::ReadFileBytes(path);
  return jrc::codec::CodecModel::Load(bytes.data(), bytes.size());
}

void AppendTableText(std::string* out, const char* title,
                     const jrc::jpeg::QuantTable& qti,
                     const std::vector<double>& steps) {
  char line[256];
  *out += title;
  *out += " (rounded steps, row-major):\n";
  const std::array<uint16_t, 64> natural = qti.NaturalOrder();
  for (int r = 0; r < 8; ++r) {
    std::string row;
    for (int c = 0; c < 8; ++c) {
      std::snprintf(line, sizeof line, "%4d", int(natural[size_t(r) * 8 + c]));
      row += line;
    }
    *out += row + "\n";
  }
  *out += title;
  *out += " (continuous steps, row-major):\n";
  for (int r = 0; r < 8; ++r) {
    std::string row;
    for (int c = 0; c < 8; ++c) {
      std::snprintf(line, sizeof line, " %9.4f", steps[size_t(r) * 8 + c]);
      row += line;
    }
    *out += row + "\n";
  }
}

}  // namespace

extern "C" {

const char* jrc_version(void) { return "0.1.0"; }

const char* jrc_status_string(jrc_status status) {
  switch (status) {
    case JRC_OK: return "ok";
    case JRC_ERR_IO: return "io error";
    case JRC_ERR_FORMAT: return "malformed input";
    case JRC_ERR_UNSUPPORTED: return "unsupported input";
    case JRC_ERR_CORRUPT: return "corrupt stream";
    case JRC_ERR_MODEL_MISMATCH: return "model mismatch";
    case JRC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case JRC_ERR_NUMERIC: return "numeric failure";
    case JRC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* jrc_last_error(void) { return g_last_error.c_str(); }

jrc_status jrc_model_load(const char* checkpoint_path, jrc_model_t** out_model) {
  if (!checkpoint_path || !out_model)
    return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  *out_model = nullptr;
  return Run([&] {
    auto model = std::make_unique<jrc_model_t>();
    model->impl = LoadModelFile(checkpoint_path);
    *out_model = model.release();
  });
}

void jrc_model_free(jrc_model_t* model) { delete model; }

jrc_status jrc_model_hash(const jrc_model_t* model, uint8_t out_hash[32]) {
  if (!model || !out_hash) return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  std::memcpy(out_hash, model->impl->Hash().data(), 32);
  g_last_error.clear();
  return JRC_OK;
}

jrc_status jrc_compress(const jrc_model_t* model, const uint8_t* jpeg_data,
                        size_t jpeg_size, jrc_mode mode, uint8_t** out_data,
                        size_t* out_size, jrc_rate_report* out_report) {
  if (!model || !jpeg_data || !out_data || !out_size)
    return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  if (mode != JRC_MODE_LOSSLESS && mode != JRC_MODE_LOSSY)
    return Fail(JRC_ERR_INVALID_ARGUMENT, "unknown mode");
  *out_data = nullptr;
  *out_size = 0;
  return Run([&] {
    const jrc::codec::CompressResult result = jrc::codec::Compress(
        jpeg_data, jpeg_size, *model->impl,
        mode == JRC_MODE_LOSSLESS ? jrc::codec::CodecMode::kLossless
                                  : jrc::codec::CodecMode::kLossy);
    if (out_report) {
      out_report->bits_coeffs = result.report.bits_x;
      out_report->bits_latent = result.report.bits_y;
      out_report->bits_hyper = result.report.bits_z;
      out_report->total_bits = result.report.total_bits;
      out_report->bpp = result.report.bpp;
    }
    *out_data = static_cast<uint8_t*>(
        CopyOut(result.container.data(), result.container.size()));
    *out_size = result.container.size();
  });
}

jrc_status jrc_decompress(const jrc_model_t* model,
                          const uint8_t* container_data, size_t container_size,
                          uint8_t** out_jpeg, size_t* out_size) {
  if (!model || !container_data || !out_jpeg || !out_size)
    return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  *out_jpeg = nullptr;
  *out_size = 0;
  return Run([&] {
    const std::vector<uint8_t> jpeg =
        jrc::codec::Decompress(container_data, container_size, *model->impl);
    *out_jpeg = static_cast<uint8_t*>(CopyOut(jpeg.data(), jpeg.size()));
    *out_size = jpeg.size();
  });
}

void jrc_buffer_free(void* data) { std::free(data); }

jrc_status jrc_train(const char* config_json, const char* out_checkpoint_path) {
  if (!config_json || !out_checkpoint_path)
    return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  return Run([&] {
    nlohmann::json j;
    jrc::train::TrainConfig cfg;
    std::vector<std::string> corpus_paths;
    std::string init_checkpoint;
    bool run_stage1 = true, run_stage2 = true;
    try {
      j = nlohmann::json::parse(config_json);
      // Missing train_config fields fall back to the built-in defaults.
      nlohmann::json merged =
          nlohmann::json::parse(jrc::train::TrainConfig().ToJson());
      merged.merge_patch(j.value("train_config", nlohmann::json::object()));
      cfg = jrc::train::TrainConfig::FromJson(merged.dump());
      corpus_paths = j.at("corpus_jpegs").get<std::vector<std::string>>();
      init_checkpoint = j.value("init_checkpoint", std::string());
      run_stage1 = j.value("run_stage1", true);
      run_stage2 = j.value("run_stage2", true);
    } catch (const nlohmann::json::exception& e) {
      jrc::Check(false, jrc::ErrorKind::kFormat,
                 std::string("bad training config: ") + e.what());
    }
    jrc::Check(!corpus_paths.empty(), jrc::ErrorKind::kInvalidArgument,
               "training config lists no corpus tiles");

    std::vector<jrc::jpeg::JpegImage> tiles;
    tiles.reserve(corpus_paths.size());
    for (const std::string& path : corpus_paths) {
      const std::vector<uint8_t> bytes = jrc::ReadFileBytes(path);
      tiles.push_back(jrc::jpeg::ParseJpeg(bytes.data(), bytes.size()));
    }

    jrc::train::Trainer trainer(cfg);
    trainer.SetCorpus(std::move(tiles));
    if (!init_checkpoint.empty()) {
      jrc::nn::Checkpoint ck = jrc::nn::LoadCheckpointFile(init_checkpoint);
      trainer.LoadCheckpoint(ck);
    }
    if (run_stage1) trainer.RunStage1();
    if (run_stage2) trainer.RunStage2();
    jrc::nn::Checkpoint out = trainer.MakeCheckpoint();
    jrc::nn::SaveCheckpointFile(out_checkpoint_path, out);
  });
}

jrc_status jrc_prepare_corpus(const char* manifest_json) {
  if (!manifest_json) return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  return Run([&] {
    const jrc::eval::CorpusManifest m =
        jrc::eval::CorpusManifest::FromJson(manifest_json);
    jrc::eval::PrepareCorpus(m);
  });
}

jrc_status jrc_eval(const char* config_json, const char* out_csv_path) {
  if (!config_json || !out_csv_path)
    return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  return Run([&] {
    std::string lossless_path;
    struct Entry {
      std::string path;
      jrc::train::TradeoffPoint point;
    };
    std::vector<Entry> entry_specs;
    std::vector<std::string> jpeg_paths;
    try {
      const nlohmann::json j = nlohmann::json::parse(config_json);
      lossless_path = j.at("lossless_checkpoint").get<std::string>();
      for (const nlohmann::json& e : j.at("entries")) {
        Entry spec;
        spec.path = e.at("checkpoint").get<std::string>();
        spec.point.lambda_r = e.at("lambda_r").get<double>();
        spec.point.lambda_d = e.at("lambda_d").get<double>();
        entry_specs.push_back(std::move(spec));
      }
      jpeg_paths = j.at("test_jpegs").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      jrc::Check(false, jrc::ErrorKind::kFormat,
                 std::string("bad evaluation config: ") + e.what());
    }
    jrc::Check(!jpeg_paths.empty(), jrc::ErrorKind::kInvalidArgument,
               "evaluation config lists no test JPEGs");

    std::map<std::string, std::unique_ptr<jrc::codec::CodecModel>> models;
    const auto model_for = [&](const std::string& path) {
      auto it = models.find(path);
      if (it == models.end())
        it = models.emplace(path, LoadModelFile(path)).first;
      return it->second.get();
    };

    const jrc::codec::CodecModel* lossless = model_for(lossless_path);
    std::vector<jrc::eval::SweepEntry> entries;
    for (const Entry& spec : entry_specs)
      entries.push_back({spec.point, model_for(spec.path)});

    std::vector<std::vector<uint8_t>> jpegs;
    jpegs.reserve(jpeg_paths.size());
    for (const std::string& path : jpeg_paths)
      jpegs.push_back(jrc::ReadFileBytes(path));

    const std::vector<jrc::eval::RdRow> rows =
        jrc::eval::RdSweep(*lossless, entries, jpegs);
    const std::string csv = jrc::eval::WriteRdCsv(rows);
    jrc::WriteFileBytes(out_csv_path,
                        reinterpret_cast<const uint8_t*>(csv.data()),
                        csv.size());
  });
}

jrc_status jrc_tables_dump(const char* checkpoint_path, char** out_text) {
  if (!checkpoint_path || !out_text)
    return Fail(JRC_ERR_INVALID_ARGUMENT, "null argument");
  *out_text = nullptr;
  return Run([&] {
    const auto model = LoadModelFile(checkpoint_path);
    std::string text;
    AppendTableText(&text, "luma", model->QtiLuma(), model->QtLumaSteps());
    AppendTableText(&text, "chroma", model->QtiChroma(),
                    model->QtChromaSteps());
    *out_text = static_cast<char*>(CopyOut(text.c_str(), text.size() + 1));
  });
}

} /* extern "C" */
