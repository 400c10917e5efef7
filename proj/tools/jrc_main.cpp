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

// Command-line front end. Links the public C API only; everything model-
// or format-specific happens behind libjrc.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jrc/jrc.h"

namespace {

int Bail(jrc_status status, const std::string& what) {
  std::fprintf(stderr, "jrc: %s: %s (%s)\n", what.c_str(), jrc_last_error(),
               jrc_status_string(status));
  return int(status);
}

std::vector<uint8_t> ReadFileOrDie(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "jrc: cannot open %s\n", path.c_str());
    std::exit(int(JRC_ERR_IO));
  }
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

void WriteFileOrDie(const std::string& path, const uint8_t* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(reinterpret_cast<const char*>(data),
                         std::streamsize(size))) {
    std::fprintf(stderr, "jrc: cannot write %s\n", path.c_str());
    std::exit(int(JRC_ERR_IO));
  }
}

using ModelPtr = std::unique_ptr<jrc_model_t, decltype(&jrc_model_free)>;

ModelPtr LoadModelOrDie(const std::string& path) {
  jrc_model_t* raw = nullptr;
  const jrc_status st = jrc_model_load(path.c_str(), &raw);
  if (st != JRC_OK) std::exit(Bail(st, "loading model " + path));
  return ModelPtr(raw, &jrc_model_free);
}

std::vector<std::string> ListJpegs(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".jpg" || ext == ".jpeg"))
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jrc: unified lossy/lossless JPEG recompression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(jrc_version()));

  // ---- compress ----
  std::string c_model, c_in, c_out, c_mode = "lossless";
  auto* compress = app.add_subcommand(
      "compress", "Re-encode a baseline JPEG into a coded container");
  compress->add_option("--model", c_model, "checkpoint file")->required();
  compress->add_option("input", c_in, "input JPEG")->required();
  compress->add_option("-o,--out", c_out, "output container")->required();
  compress->add_option("--mode", c_mode, "lossless|lossy")
      ->check(CLI::IsMember({"lossless", "lossy"}));

  // ---- decompress ----
  std::string d_model, d_in, d_out;
  auto* decompress = app.add_subcommand(
      "decompress", "Decode a container back to a baseline JPEG");
  decompress->add_option("--model", d_model, "checkpoint file")->required();
  decompress->add_option("input", d_in, "input container")->required();
  decompress->add_option("-o,--out", d_out, "output JPEG")->required();

  // ---- train ----
  std::string t_config, t_corpus_dir, t_out, t_init;
  double t_lambda_r = -1.0, t_lambda_d = -1.0;
  std::string t_seed;
  int t_scale = 0, t_table_quality = 0;
  bool t_no_tables = false, t_skip1 = false, t_skip2 = false;
  auto* train = app.add_subcommand(
      "train", "Run the two-stage training procedure on a JPEG tile corpus");
  train->add_option("--config", t_config,
                    "JSON file with a train_config block (fields optional)");
  train->add_option("--corpus-dir", t_corpus_dir,
                    "directory of training tile JPEGs")
      ->required();
  train->add_option("-o,--out", t_out, "output checkpoint")->required();
  train->add_option("--init", t_init, "checkpoint to resume from");
  train->add_option("--lambda-r", t_lambda_r, "rate weight override");
  train->add_option("--lambda-d", t_lambda_d, "distortion weight override");
  train->add_option("--seed", t_seed, "RNG seed override (decimal)");
  train->add_option("--scale", t_scale, "schedule divisor override");
  train->add_option("--table-quality", t_table_quality,
                    "table initialization quality override");
  train->add_flag("--no-learn-tables", t_no_tables,
                  "freeze the quantization tables at their initialization");
  train->add_flag("--skip-stage1", t_skip1, "do not run stage 1");
  train->add_flag("--skip-stage2", t_skip2, "do not run stage 2");

  // ---- prepare-corpus ----
  std::string p_manifest, p_out_dir;
  std::vector<std::string> p_sources;
  int p_crop = 256, p_quality = 75, p_crops = 1;
  std::string p_seed = "1";
  auto* prepare = app.add_subcommand(
      "prepare-corpus", "Deterministically crop + JPEG-encode training tiles");
  prepare->add_option("--manifest", p_manifest,
                      "JSON manifest (overrides the other options)");
  prepare->add_option("--source", p_sources, "source PPM/PNG image");
  prepare->add_option("--out-dir", p_out_dir, "tile output directory");
  prepare->add_option("--crop-size", p_crop, "square crop size");
  prepare->add_option("--quality", p_quality, "JPEG quality");
  prepare->add_option("--seed", p_seed, "crop RNG seed (decimal)");
  prepare->add_option("--crops-per-source", p_crops, "crops per source image");

  // ---- eval ----
  std::string e_lossless, e_out;
  std::vector<std::string> e_entries, e_jpegs;
  auto* eval = app.add_subcommand(
      "eval", "Rate-distortion sweep over checkpoints and test JPEGs");
  eval->add_option("--lossless", e_lossless,
                   "checkpoint for the lossless-mode row")
      ->required();
  eval->add_option("--entry", e_entries,
                   "lossy checkpoint as path,lambda_r,lambda_d (repeatable)")
      ->expected(1)
      ->allow_extra_args(false);
  eval->add_option("jpegs", e_jpegs, "test JPEG files")->required();
  eval->add_option("-o,--out", e_out, "output CSV")->required();

  // ---- tables ----
  std::string q_model;
  auto* tables = app.add_subcommand(
      "tables", "Print the learned quantization tables of a checkpoint");
  tables->add_option("model", q_model, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  if (compress->parsed()) {
    const ModelPtr model = LoadModelOrDie(c_model);
    const std::vector<uint8_t> jpeg = ReadFileOrDie(c_in);
    uint8_t* out = nullptr;
    size_t out_size = 0;
    jrc_rate_report report{};
    const jrc_status st = jrc_compress(
        model.get(), jpeg.data(), jpeg.size(),
        c_mode == "lossless" ? JRC_MODE_LOSSLESS : JRC_MODE_LOSSY, &out,
        &out_size, &report);
    if (st != JRC_OK) return Bail(st, "compressing " + c_in);
    WriteFileOrDie(c_out, out, out_size);
    jrc_buffer_free(out);
    std::printf("%s: %zu -> %zu bytes (%.1f%%), model estimate %.3f bpp\n",
                c_out.c_str(), jpeg.size(), out_size,
                100.0 * double(out_size) / double(jpeg.size()), report.bpp);
    return 0;
  }

  if (decompress->parsed()) {
    const ModelPtr model = LoadModelOrDie(d_model);
    const std::vector<uint8_t> container = ReadFileOrDie(d_in);
    uint8_t* out = nullptr;
    size_t out_size = 0;
    const jrc_status st = jrc_decompress(model.get(), container.data(),
                                         container.size(), &out, &out_size);
    if (st != JRC_OK) return Bail(st, "decompressing " + d_in);
    WriteFileOrDie(d_out, out, out_size);
    jrc_buffer_free(out);
    std::printf("%s: %zu bytes\n", d_out.c_str(), out_size);
    return 0;
  }

  if (train->parsed()) {
    nlohmann::json config = nlohmann::json::object();
    if (!t_config.empty()) {
      const std::vector<uint8_t> bytes = ReadFileOrDie(t_config);
      try {
        config = nlohmann::json::parse(bytes.begin(), bytes.end());
      } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "jrc: bad config %s: %s\n", t_config.c_str(),
                     e.what());
        return int(JRC_ERR_FORMAT);
      }
    }
    nlohmann::json& tc = config["train_config"];
    if (t_lambda_r >= 0.0) tc["lambda_r"] = t_lambda_r;
    if (t_lambda_d >= 0.0) tc["lambda_d"] = t_lambda_d;
    if (!t_seed.empty()) tc["seed"] = t_seed;
    if (t_scale > 0) tc["schedule"]["scale"] = t_scale;
    if (t_table_quality > 0) tc["table_init_quality"] = t_table_quality;
    if (t_no_tables) tc["learn_tables"] = false;
    config["corpus_jpegs"] = ListJpegs(t_corpus_dir);
    if (!t_init.empty()) config["init_checkpoint"] = t_init;
    if (t_skip1) config["run_stage1"] = false;
    if (t_skip2) config["run_stage2"] = false;
    const jrc_status st = jrc_train(config.dump().c_str(), t_out.c_str());
    if (st != JRC_OK) return Bail(st, "training");
    std::printf("%s: trained on %zu tiles\n", t_out.c_str(),
                config["corpus_jpegs"].size());
    return 0;
  }

  if (prepare->parsed()) {
    std::string manifest;
    if (!p_manifest.empty()) {
      const std::vector<uint8_t> bytes = ReadFileOrDie(p_manifest);
      manifest.assign(bytes.begin(), bytes.end());
    } else {
      nlohmann::json j;
      j["sources"] = p_sources;
      j["crop_size"] = p_crop;
      j["quality"] = p_quality;
      j["seed"] = p_seed;
      j["crops_per_source"] = p_crops;
      j["out_dir"] = p_out_dir;
      manifest = j.dump();
    }
    const jrc_status st = jrc_prepare_corpus(manifest.c_str());
    if (st != JRC_OK) return Bail(st, "preparing corpus");
    std::printf("corpus ready\n");
    return 0;
  }

  if (eval->parsed()) {
    nlohmann::json j;
    j["lossless_checkpoint"] = e_lossless;
    j["entries"] = nlohmann::json::array();
    for (const std::string& spec : e_entries) {
      const size_t a = spec.rfind(',');
      const size_t b = a == std::string::npos ? a : spec.rfind(',', a - 1);
      if (b == std::string::npos || b == 0) {
        std::fprintf(stderr, "jrc: bad --entry %s (want path,lr,ld)\n",
                     spec.c_str());
        return int(JRC_ERR_INVALID_ARGUMENT);
      }
      try {
        nlohmann::json e;
        e["checkpoint"] = spec.substr(0, b);
        e["lambda_r"] = std::stod(spec.substr(b + 1, a - b - 1));
        e["lambda_d"] = std::stod(spec.substr(a + 1));
        j["entries"].push_back(e);
      } catch (const std::exception&) {
        std::fprintf(stderr, "jrc: bad --entry %s (want path,lr,ld)\n",
                     spec.c_str());
        return int(JRC_ERR_INVALID_ARGUMENT);
      }
    }
    j["test_jpegs"] = e_jpegs;
    const jrc_status st = jrc_eval(j.dump().c_str(), e_out.c_str());
    if (st != JRC_OK) return Bail(st, "evaluating");
    std::printf("%s: %zu rows\n", e_out.c_str(), e_entries.size() + 1);
    return 0;
  }

  if (tables->parsed()) {
    char* text = nullptr;
    const jrc_status st = jrc_tables_dump(q_model.c_str(), &text);
    if (st != JRC_OK) return Bail(st, "reading tables from " + q_model);
    std::fputs(text, stdout);
    jrc_buffer_free(text);
    return 0;
  }

  return 0;
}
