// Copyright (c) 2026 The promptpool Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver for the promptpool kernels. Five verbs:
//
//   scores       text-conditioned relevance scores for a visual token grid
//   pool         score-weighted 3-D pooling of a token grid
//   bench        pooling throughput across parallelism degrees
//   certificate  prompt-relevance certificates for batches of clips
//   pe-extend    positional-embedding table extension
//
// Machine-readable output is one JSON object per line on stdout; progress
// and human-readable summaries go to stderr. Tensors travel as .npy files
// (little-endian float32/float64, C order). Option values resolve as:
// command-line flag, then PROMPTPOOL_* environment variable, then --config
// JSON file, then built-in default.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "promptpool/promptpool.hpp"

namespace pp = promptpool;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Option plumbing

std::string env_name(std::string key) {
    for (char& c : key) c = c == '-' ? '_' : static_cast<char>(std::toupper(c));
    return "PROMPTPOOL_" + key;
}

// One registered option plus the recipe for filling it from a config file.
// A config value applies only when neither the flag nor its environment
// variable was given.
struct ConfigBinding {
    CLI::Option* opt;
    std::string key;
    std::function<void(const json&)> apply;
};

class OptionSet {
public:
    explicit OptionSet(CLI::App* cmd) : cmd_(cmd) {
        cmd->add_option("--config", config_path_, "JSON file with defaults for this command");
    }

    template <typename T>
    CLI::Option* bind(const std::string& flag, const std::string& key, T& var,
                      const std::string& desc) {
        CLI::Option* opt = cmd_->add_option(flag, var, desc)->envname(env_name(key));
        bindings_.push_back({opt, key, [&var](const json& v) { v.get_to(var); }});
        return opt;
    }

    CLI::Option* bind_flag(const std::string& flag, const std::string& key, bool& var,
                           const std::string& desc) {
        CLI::Option* opt = cmd_->add_flag(flag, var, desc)->envname(env_name(key));
        bindings_.push_back({opt, key, [&var](const json& v) { v.get_to(var); }});
        return opt;
    }

    // Kernel/stride style options: repeatable "kt,kw,kh" strings on the
    // command line; in config files either "2,3,3", [2,3,3], or a list of
    // such triples for multi-branch specs.
    CLI::Option* bind_triples(const std::string& flag, const std::string& key,
                              std::vector<std::string>& var, const std::string& desc) {
        CLI::Option* opt = cmd_->add_option(flag, var, desc)->envname(env_name(key));
        bindings_.push_back({opt, key, [&var](const json& v) {
                                 var.clear();
                                 const auto as_csv = [](const json& j) -> std::string {
                                     if (j.is_string()) return j.get<std::string>();
                                     std::string csv;
                                     for (const json& n : j) {
                                         if (!csv.empty()) csv += ',';
                                         csv += std::to_string(n.get<std::uint64_t>());
                                     }
                                     return csv;
                                 };
                                 if (v.is_array() && !v.empty() && v.front().is_array()) {
                                     for (const json& j : v) var.push_back(as_csv(j));
                                 } else {
                                     var.push_back(as_csv(v));
                                 }
                             }});
        return opt;
    }

    // Called after parsing: layers config-file values under flag/env ones.
    void apply_config() const {
        if (config_path_.empty()) return;
        std::ifstream f(config_path_);
        if (!f) throw std::runtime_error(config_path_ + ": cannot open config file");
        json cfg = json::parse(f, nullptr, true, /*ignore_comments=*/true);
        if (!cfg.is_object()) throw std::runtime_error(config_path_ + ": config must be a JSON object");
        for (const ConfigBinding& b : bindings_) {
            if (b.opt->count() == 0 && cfg.contains(b.key)) {
                try {
                    b.apply(cfg.at(b.key));
                } catch (const std::exception& e) {
                    throw std::runtime_error(config_path_ + ": bad value for '" + b.key +
                                             "': " + e.what());
                }
            }
        }
    }

private:
    CLI::App* cmd_;
    std::string config_path_;
    std::vector<ConfigBinding> bindings_;
};

std::array<std::size_t, 3> parse_triple(const std::string& text, const char* what) {
    std::array<std::size_t, 3> out{};
    std::size_t begin = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t end = i == 2 ? text.size() : text.find(',', begin);
        if (end == std::string::npos) {
            throw std::invalid_argument(std::string(what) + " needs three comma-separated " +
                                        "integers, got '" + text + "'");
        }
        const char* first = text.data() + begin;
        const char* last = text.data() + end;
        const auto [ptr, ec] = std::from_chars(first, last, out[i]);
        if (ec != std::errc() || ptr != last || first == last) {
            throw std::invalid_argument(std::string(what) + ": bad integer in '" + text + "'");
        }
        begin = end + 1;
    }
    return out;
}

std::vector<std::size_t> parse_csv_sizes(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t end = text.find(',', begin);
        if (end == std::string::npos) end = text.size();
        std::size_t value = 0;
        const char* first = text.data() + begin;
        const char* last = text.data() + end;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last || first == last) {
            throw std::invalid_argument(std::string(what) + ": bad integer in '" + text + "'");
        }
        out.push_back(value);
        begin = end + 1;
    }
    return out;
}

void require_path(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw std::invalid_argument(std::string("missing required option ") + flag);
    }
}

void emit(const json& record) { std::cout << record.dump() << "\n"; }

std::string one_decimal(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << v;
    return os.str();
}

// Dtype consistency across a command's tensor inputs: outputs inherit the
// input dtype, so mixing f32 and f64 inputs is an error rather than a silent
// promotion.
pp::Dtype common_dtype(const std::vector<std::pair<const pp::npy::LoadedTensor*, std::string>>& inputs) {
    const pp::Dtype d = pp::npy::dtype_of(*inputs.front().first);
    for (const auto& [tensor, path] : inputs) {
        if (pp::npy::dtype_of(*tensor) != d) {
            throw std::invalid_argument("input dtypes differ: " + inputs.front().second + " is " +
                                        pp::to_string(d) + " but " + path + " is " +
                                        pp::to_string(pp::npy::dtype_of(*tensor)));
        }
    }
    return d;
}

json shape_json(const std::vector<std::size_t>& shape) {
    json a = json::array();
    for (std::size_t e : shape) a.push_back(e);
    return a;
}

// ---------------------------------------------------------------------------
// scores

struct ScoresOpts {
    std::string input;
    std::string projection;
    std::vector<std::string> texts;
    std::string output;
    double tau = 100.0;
    bool normalize = true;
    std::size_t parallelism = 1;
};

template <typename T>
void run_scores_typed(pp::Tensor<T> video, pp::Tensor<T> projection,
                      std::vector<pp::Tensor<T>> prompts, const ScoresOpts& o) {
    pp::AlignmentConfig cfg;
    cfg.temperature = o.tau;
    cfg.normalize = o.normalize;

    const pp::Tensor<T> projected = pp::project_visual(video, projection, o.parallelism);
    const pp::Tensor<T> scores = pp::scores_multi_prompt(projected, prompts, cfg, o.parallelism);

    double sum = 0.0;
    double max_score = 0.0;
    for (std::size_t i = 0; i < scores.numel(); ++i) {
        sum += static_cast<double>(scores.data()[i]);
        max_score = std::max(max_score, static_cast<double>(scores.data()[i]));
    }
    const double entropy = pp::score_entropy(scores);
    pp::npy::write_tensor(scores, o.output);

    emit(json{{"command", "scores"},
              {"shape", shape_json(scores.shape())},
              {"prompts", prompts.size()},
              {"sum", sum},
              {"max_score", max_score},
              {"entropy", entropy},
              {"output", o.output}});
    std::cerr << "scores: shape " << pp::to_string(pp::grid_shape(scores)) << ", sum " << sum
              << ", max " << max_score << ", entropy " << entropy << " -> " << o.output << "\n";
}

int run_scores(const ScoresOpts& o) {
    require_path(o.input, "--input");
    require_path(o.projection, "--projection");
    require_path(o.output, "--output");
    if (o.texts.empty()) throw std::invalid_argument("missing required option --text");
    if (o.parallelism == 0) throw std::invalid_argument("parallelism must be at least 1");

    pp::npy::LoadedTensor video = pp::npy::read_tensor(o.input);
    pp::npy::LoadedTensor projection = pp::npy::read_tensor(o.projection);
    std::vector<pp::npy::LoadedTensor> texts;
    texts.reserve(o.texts.size());
    for (const std::string& path : o.texts) texts.push_back(pp::npy::read_tensor(path));

    std::vector<std::pair<const pp::npy::LoadedTensor*, std::string>> inputs{{&video, o.input},
                                                                        {&projection, o.projection}};
    for (std::size_t i = 0; i < texts.size(); ++i) inputs.emplace_back(&texts[i], o.texts[i]);

    if (common_dtype(inputs) == pp::Dtype::f32) {
        std::vector<pp::Tensor<float>> prompts;
        for (pp::npy::LoadedTensor& t : texts) prompts.push_back(std::get<pp::Tensor<float>>(std::move(t)));
        run_scores_typed(std::get<pp::Tensor<float>>(std::move(video)),
                         std::get<pp::Tensor<float>>(std::move(projection)), std::move(prompts), o);
    } else {
        std::vector<pp::Tensor<double>> prompts;
        for (pp::npy::LoadedTensor& t : texts) prompts.push_back(std::get<pp::Tensor<double>>(std::move(t)));
        run_scores_typed(std::get<pp::Tensor<double>>(std::move(video)),
                         std::get<pp::Tensor<double>>(std::move(projection)), std::move(prompts), o);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// pool

struct PoolOpts {
    std::string input;
    std::string scores;
    std::string output;
    std::vector<std::string> kernels{"2,3,3"};
    std::vector<std::string> strides{"2,3,3"};
    std::string mode = "weighted-average";
    bool separate_st = false;
    std::size_t parallelism = 1;
};

std::vector<pp::PoolingSpec> build_specs(const PoolOpts& o) {
    if (o.kernels.size() != o.strides.size()) {
        throw std::invalid_argument("got " + std::to_string(o.kernels.size()) + " --kernel but " +
                                    std::to_string(o.strides.size()) + " --stride occurrences");
    }
    const pp::PoolMode mode = pp::pool_mode_from_string(o.mode);
    std::vector<pp::PoolingSpec> specs;
    for (std::size_t i = 0; i < o.kernels.size(); ++i) {
        pp::PoolingSpec spec;
        spec.kernel = parse_triple(o.kernels[i], "--kernel");
        spec.stride = parse_triple(o.strides[i], "--stride");
        spec.mode = mode;
        specs.push_back(spec);
    }
    return specs;
}

template <typename T>
void run_pool_typed(const pp::Tensor<T>& video, const pp::Tensor<T>& scores, const PoolOpts& o) {
    const std::vector<pp::PoolingSpec> specs = build_specs(o);
    const pp::Shape3 in = pp::grid_shape(video);
    const std::size_t input_tokens = in.count();

    pp::Tensor<T> pooled;
    json record{{"command", "pool"}, {"mode", o.mode}, {"input_tokens", input_tokens}};
    if (o.separate_st) {
        if (specs.size() != 1) {
            throw std::invalid_argument("--separate-st takes exactly one kernel/stride pair");
        }
        pp::PoolingSpec spec_t = specs[0];
        spec_t.kernel = {specs[0].kernel[0], 1, 1};
        spec_t.stride = {specs[0].stride[0], 1, 1};
        pp::PoolingSpec spec_s = specs[0];
        spec_s.kernel = {1, specs[0].kernel[1], specs[0].kernel[2]};
        spec_s.stride = {1, specs[0].stride[1], specs[0].stride[2]};
        pooled = pp::pool_separate_st(video, scores, spec_t, spec_s, o.parallelism);
        record["branches"] = 2;
    } else if (specs.size() > 1) {
        pooled = pp::pool_multi(video, scores, specs, o.parallelism);
        record["branches"] = specs.size();
    } else {
        pooled = pp::pool_forward(video, scores, specs[0], o.parallelism);
        record["output_shape"] = shape_json(pooled.shape());
    }

    const std::size_t depth = pooled.extent(pooled.rank() - 1);
    const std::size_t output_tokens = pooled.numel() / depth;
    const double ratio = static_cast<double>(input_tokens) / static_cast<double>(output_tokens);
    pp::npy::write_tensor(pooled, o.output);

    record["output_tokens"] = output_tokens;
    record["ratio"] = ratio;
    record["output"] = o.output;
    emit(record);
    std::cerr << "pool: " << input_tokens << " -> " << output_tokens << " tokens, ratio "
              << one_decimal(ratio) << ", mode " << o.mode << " -> " << o.output << "\n";
}

int run_pool(const PoolOpts& o) {
    require_path(o.input, "--input");
    require_path(o.output, "--output");
    if (o.parallelism == 0) throw std::invalid_argument("parallelism must be at least 1");

    pp::npy::LoadedTensor video = pp::npy::read_tensor(o.input);
    const bool baseline = o.mode == "average-baseline";
    if (o.scores.empty()) {
        if (!baseline) {
            throw std::invalid_argument("mode '" + o.mode +
                                        "' needs --scores (only average-baseline runs without)");
        }
        if (pp::npy::dtype_of(video) == pp::Dtype::f32) {
            run_pool_typed(std::get<pp::Tensor<float>>(std::move(video)), pp::Tensor<float>(), o);
        } else {
            run_pool_typed(std::get<pp::Tensor<double>>(std::move(video)), pp::Tensor<double>(), o);
        }
        return 0;
    }

    pp::npy::LoadedTensor scores = pp::npy::read_tensor(o.scores);
    if (common_dtype({{&video, o.input}, {&scores, o.scores}}) == pp::Dtype::f32) {
        run_pool_typed(std::get<pp::Tensor<float>>(std::move(video)),
                       std::get<pp::Tensor<float>>(std::move(scores)), o);
    } else {
        run_pool_typed(std::get<pp::Tensor<double>>(std::move(video)),
                       std::get<pp::Tensor<double>>(std::move(scores)), o);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
    std::string input;
    std::string scores;
    std::string shape = "32,24,24,1024";
    std::vector<std::string> kernels{"2,3,3"};
    std::vector<std::string> strides{"2,3,3"};
    std::string mode = "weighted-average";
    std::vector<std::size_t> parallelism{1, 2, 8};
    std::size_t reps = 5;
    std::uint64_t seed = 7;
};

template <typename T>
int run_bench_typed(const pp::Tensor<T>& video, const pp::Tensor<T>& scores, const BenchOpts& o) {
    PoolOpts shim;
    shim.kernels = o.kernels;
    shim.strides = o.strides;
    shim.mode = o.mode;
    const std::vector<pp::PoolingSpec> specs = build_specs(shim);
    if (specs.size() != 1) {
        throw std::invalid_argument("bench takes exactly one kernel/stride pair");
    }
    const pp::PoolingSpec spec = specs.front();

    const pp::Shape3 in = pp::grid_shape(video);
    const pp::Shape3 out = pp::output_shape(in, spec);

    pp::Tensor<T> reference;
    bool all_identical = true;
    for (std::size_t degree_index = 0; degree_index < o.parallelism.size(); ++degree_index) {
        const std::size_t degree = o.parallelism[degree_index];
        if (degree == 0) throw std::invalid_argument("parallelism must be at least 1");

        pp::Tensor<T> result;
        std::vector<double> times;
        times.reserve(o.reps);
        for (std::size_t rep = 0; rep < o.reps; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            result = pp::pool_forward(video, scores, spec, degree);
            const auto stop = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(stop - start).count());
        }
        std::vector<double> sorted = times;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t mid = sorted.size() / 2;
        const double median = sorted.size() % 2 == 1
                                  ? sorted[mid]
                                  : 0.5 * (sorted[mid - 1] + sorted[mid]);

        bool identical = true;
        if (degree_index == 0) {
            reference = result;
        } else {
            identical = result.numel() == reference.numel() &&
                        std::memcmp(result.data(), reference.data(),
                                    result.numel() * sizeof(T)) == 0;
            all_identical = all_identical && identical;
        }

        emit(json{{"command", "bench"},
                  {"parallelism", degree},
                  {"reps", o.reps},
                  {"times_seconds", times},
                  {"median_seconds", median},
                  {"tokens_in", in.count()},
                  {"tokens_out", out.count()},
                  {"cells", out.count()},
                  {"tokens_per_second", static_cast<double>(in.count()) / median},
                  {"identical", identical}});
        std::cerr << "bench: parallelism " << degree << ", median "
                  << static_cast<std::uint64_t>(median * 1e6) << " us, "
                  << (identical ? "bit-identical" : "MISMATCH") << "\n";
    }
    if (!all_identical) {
        std::cerr << "bench: outputs differ across parallelism degrees\n";
        return 1;
    }
    return 0;
}

int run_bench(const BenchOpts& o) {
    if (o.reps < 3) {
        throw std::invalid_argument("benchmark needs at least 3 repetitions, got " +
                                    std::to_string(o.reps));
    }
    if (o.parallelism.empty()) throw std::invalid_argument("no parallelism degrees given");

    if (!o.input.empty()) {
        require_path(o.scores, "--scores");
        pp::npy::LoadedTensor video = pp::npy::read_tensor(o.input);
        pp::npy::LoadedTensor scores = pp::npy::read_tensor(o.scores);
        if (common_dtype({{&video, o.input}, {&scores, o.scores}}) == pp::Dtype::f32) {
            return run_bench_typed(std::get<pp::Tensor<float>>(std::move(video)),
                                   std::get<pp::Tensor<float>>(std::move(scores)), o);
        }
        return run_bench_typed(std::get<pp::Tensor<double>>(std::move(video)),
                               std::get<pp::Tensor<double>>(std::move(scores)), o);
    }

    const std::vector<std::size_t> extents = parse_csv_sizes(o.shape, "--shape");
    if (extents.size() != 4) {
        throw std::invalid_argument("--shape needs four comma-separated extents t,w,h,d");
    }
    // Synthetic workload: Gaussian tokens and softmax scores from Gaussian
    // logits, so weighted-average windows always carry positive mass.
    pp::detail::GaussianSource gauss(o.seed);
    pp::Tensor<float> video(extents);
    for (std::size_t i = 0; i < video.numel(); ++i) {
        video.data()[i] = static_cast<float>(gauss.next());
    }
    pp::Tensor<float> logits({extents[0], extents[1], extents[2]});
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        logits.data()[i] = static_cast<float>(gauss.next());
    }
    return run_bench_typed(video, pp::softmax_scores(logits), o);
}

// ---------------------------------------------------------------------------
// certificate

struct CertificateOpts {
    std::string input;
    std::string output;
    double threshold = 0.5;
    std::size_t top_k = 0;  // 0: all records, manifest order
};

pp::Tensor<double> load_as_f64(const std::string& path) {
    pp::npy::LoadedTensor t = pp::npy::read_tensor(path);
    if (std::holds_alternative<pp::Tensor<double>>(t)) {
        return std::get<pp::Tensor<double>>(std::move(t));
    }
    const pp::Tensor<float>& f = std::get<pp::Tensor<float>>(t);
    return pp::Tensor<double>(f.shape(), std::vector<double>(f.data(), f.data() + f.numel()));
}

int run_certificate(const CertificateOpts& o) {
    require_path(o.input, "--input");
    std::ifstream f(o.input);
    if (!f) throw std::runtime_error(o.input + ": cannot open manifest");
    const json manifest = json::parse(f, nullptr, true, /*ignore_comments=*/true);
    if (!manifest.is_array()) throw std::runtime_error(o.input + ": manifest must be a JSON array");

    // Relative tensor paths resolve against the manifest's directory.
    const std::filesystem::path base = std::filesystem::path(o.input).parent_path();
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_relative() ? (base / path).string() : p;
    };

    struct Row {
        json record;
        double certificate = 0.0;
        bool failed = false;
    };
    std::vector<Row> rows;
    bool any_failed = false;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const json& entry = manifest[i];
        const std::string id = entry.contains("id") ? entry.at("id").get<std::string>()
                                                    : "video" + std::to_string(i);
        Row row;
        try {
            if (!entry.contains("frames") || !entry.contains("text")) {
                throw std::runtime_error("manifest record needs 'frames' and 'text' paths");
            }
            const pp::Tensor<double> frames =
                load_as_f64(resolve(entry.at("frames").get<std::string>()));
            const pp::Tensor<double> text =
                load_as_f64(resolve(entry.at("text").get<std::string>()));
            const pp::RelevanceProfile profile =
                pp::certificate(pp::frame_similarities(frames, text), o.threshold);

            std::size_t relevant = 0;
            for (const bool b : profile.mask) relevant += b ? 1 : 0;
            row.certificate = profile.certificate;
            row.record = json{{"id", id},
                              {"frames", profile.mask.size()},
                              {"relevant", relevant},
                              {"certificate", profile.certificate},
                              {"mask", profile.mask}};
        } catch (const std::exception& e) {
            row.failed = true;
            any_failed = true;
            row.record = json{{"id", id}, {"error", e.what()}};
            std::cerr << "certificate: " << id << ": " << e.what() << "\n";
        }
        rows.push_back(std::move(row));
    }

    // Ranking support: with --top-k, successful records sort by ascending
    // certificate (ties keep manifest order) and only the first K survive;
    // failures are always reported.
    if (o.top_k > 0) {
        std::vector<Row> ok;
        std::vector<Row> failed;
        for (Row& r : rows) (r.failed ? failed : ok).push_back(std::move(r));
        std::stable_sort(ok.begin(), ok.end(),
                         [](const Row& a, const Row& b) { return a.certificate < b.certificate; });
        if (ok.size() > o.top_k) ok.resize(o.top_k);
        rows = std::move(ok);
        for (Row& r : failed) rows.push_back(std::move(r));
    }

    std::ofstream out;
    if (!o.output.empty()) {
        out.open(o.output);
        if (!out) throw std::runtime_error(o.output + ": cannot open for writing");
    }
    for (const Row& r : rows) {
        emit(r.record);
        if (out.is_open()) out << r.record.dump() << "\n";
    }
    std::cerr << "certificate: " << rows.size() << " records, threshold " << o.threshold << "\n";
    return any_failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// pe-extend

struct PeExtendOpts {
    std::string input;
    std::string output;
    std::string mode = "continuous-piecewise";
    std::size_t target_length = 0;  // 0: maximum reachable under the schedule
    std::size_t boundary = 20;
    double r_head = 1.0;
    double r_tail = 0.25;
    std::uint64_t seed = 7;
    double scale = 0.02;
};

template <typename T>
void run_pe_extend_typed(const pp::Tensor<T>& table, const PeExtendOpts& o) {
    const std::size_t source_length = table.extent(0);
    pp::Tensor<T> extended;
    std::size_t target = o.target_length;

    if (o.mode == "continuous-piecewise" || o.mode == "literal") {
        pp::RateSchedule sched;
        sched.boundary = o.boundary;
        sched.r_head = o.r_head;
        sched.r_tail = o.r_tail;
        sched.continuity = pp::continuity_from_string(o.mode);
        if (target == 0) target = pp::max_target_length(source_length, sched);
        sched.target_length = target;
        extended = pp::interpolate_pe(table, sched);
    } else if (o.mode == "uniform") {
        if (target == 0) throw std::invalid_argument("uniform mode needs --target-length");
        extended = pp::uniform_interpolate_pe(table, target);
    } else if (o.mode == "random-tail") {
        if (target == 0) throw std::invalid_argument("random-tail mode needs --target-length");
        extended = pp::random_tail_extend(table, target, o.seed, o.scale);
    } else {
        throw std::invalid_argument("unknown pe-extend mode '" + o.mode +
                                    "' (expected continuous-piecewise, literal, uniform, or "
                                    "random-tail)");
    }

    pp::npy::write_tensor(extended, o.output);
    emit(json{{"command", "pe-extend"},
              {"source_length", source_length},
              {"target_length", extended.extent(0)},
              {"width", extended.extent(1)},
              {"mode", o.mode},
              {"output", o.output}});
    std::cerr << "pe-extend: " << source_length << " -> " << extended.extent(0) << " rows, mode "
              << o.mode << " -> " << o.output << "\n";
}

int run_pe_extend(const PeExtendOpts& o) {
    require_path(o.input, "--input");
    require_path(o.output, "--output");
    pp::npy::LoadedTensor table = pp::npy::read_tensor(o.input);
    if (pp::npy::dtype_of(table) == pp::Dtype::f32) {
        run_pe_extend_typed(std::get<pp::Tensor<float>>(std::move(table)), o);
    } else {
        run_pe_extend_typed(std::get<pp::Tensor<double>>(std::move(table)), o);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prompt-guided visual token compression kernels"};
    app.require_subcommand(1);

    ScoresOpts scores_opts;
    CLI::App* scores_cmd =
        app.add_subcommand("scores", "compute text-conditioned relevance scores");
    OptionSet scores_set(scores_cmd);
    scores_set.bind("--input", "input", scores_opts.input, "visual tokens, rank-4 (t,w,h,d) .npy");
    scores_set.bind("--projection", "projection", scores_opts.projection,
                    "projection matrix, rank-2 (d,d') .npy");
    scores_set.bind("--text", "text", scores_opts.texts,
                    "text embedding .npy, rank-1 (d'); repeat for multi-prompt averaging");
    scores_set.bind("--output", "output", scores_opts.output, "where to write the score tensor");
    scores_set.bind("--tau", "tau", scores_opts.tau, "softmax temperature");
    scores_set.bind_flag("--normalize,!--no-normalize", "normalize", scores_opts.normalize,
                         "cosine-normalize features before the dot product");
    scores_set.bind("--parallelism", "parallelism", scores_opts.parallelism, "worker thread count");

    PoolOpts pool_opts;
    CLI::App* pool_cmd = app.add_subcommand("pool", "pool a token grid with relevance weights");
    OptionSet pool_set(pool_cmd);
    pool_set.bind("--input", "input", pool_opts.input, "visual tokens, rank-4 (t,w,h,d) .npy");
    pool_set.bind("--scores", "scores", pool_opts.scores, "score tensor, rank-3 (t,w,h) .npy");
    pool_set.bind("--output", "output", pool_opts.output, "where to write the pooled tensor");
    pool_set.bind_triples("--kernel", "kernel", pool_opts.kernels,
                          "window extents kt,kw,kh; repeat for multi-branch pooling");
    pool_set.bind_triples("--stride", "stride", pool_opts.strides,
                          "window steps dt,dw,dh; repeat for multi-branch pooling");
    pool_set.bind("--mode", "mode", pool_opts.mode,
                  "weighted-sum-literal | weighted-average | max | average-baseline");
    pool_set.bind_flag("--separate-st", "separate_st", pool_opts.separate_st,
                       "split into a temporal branch (t-extents) and a spatial branch "
                       "(w,h-extents) and concatenate the token sequences");
    pool_set.bind("--parallelism", "parallelism", pool_opts.parallelism, "worker thread count");

    BenchOpts bench_opts;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "pooling throughput across parallelism degrees");
    OptionSet bench_set(bench_cmd);
    bench_set.bind("--input", "input", bench_opts.input,
                   "visual tokens .npy (omit to use a synthetic workload)");
    bench_set.bind("--scores", "scores", bench_opts.scores, "score tensor .npy");
    bench_set.bind("--shape", "shape", bench_opts.shape, "synthetic workload extents t,w,h,d");
    bench_set.bind_triples("--kernel", "kernel", bench_opts.kernels, "window extents kt,kw,kh");
    bench_set.bind_triples("--stride", "stride", bench_opts.strides, "window steps dt,dw,dh");
    bench_set.bind("--mode", "mode", bench_opts.mode, "pooling mode to benchmark");
    bench_set.bind("--parallelism", "parallelism", bench_opts.parallelism,
                   "parallelism degrees to sweep")
        ->delimiter(',');
    bench_set.bind("--reps", "reps", bench_opts.reps, "timed repetitions per degree (>= 3)");
    bench_set.bind("--seed", "seed", bench_opts.seed, "seed for the synthetic workload");

    CertificateOpts cert_opts;
    CLI::App* cert_cmd =
        app.add_subcommand("certificate", "prompt-relevance certificates for clip batches");
    OptionSet cert_set(cert_cmd);
    cert_set.bind("--input", "input", cert_opts.input,
                  "manifest: JSON array of {id, frames, text} records");
    cert_set.bind("--output", "output", cert_opts.output,
                  "also write the JSON records to this file");
    cert_set.bind("--threshold", "threshold", cert_opts.threshold,
                  "relevance threshold (strictly exceeded)");
    cert_set.bind("--top-k", "top_k", cert_opts.top_k,
                  "keep only the K records with the smallest certificates");

    PeExtendOpts pe_opts;
    CLI::App* pe_cmd = app.add_subcommand("pe-extend", "extend a positional-embedding table");
    OptionSet pe_set(pe_cmd);
    pe_set.bind("--input", "input", pe_opts.input, "source table, rank-2 (length,width) .npy");
    pe_set.bind("--output", "output", pe_opts.output, "where to write the extended table");
    pe_set.bind("--mode", "mode", pe_opts.mode,
                "continuous-piecewise | literal | uniform | random-tail");
    pe_set.bind("--target-length", "target_length", pe_opts.target_length,
                "rows in the extended table (0: maximum reachable under the schedule)");
    pe_set.bind("--boundary", "boundary", pe_opts.boundary, "position where the rate switches");
    pe_set.bind("--r-head", "r_head", pe_opts.r_head, "interpolation rate before the boundary");
    pe_set.bind("--r-tail", "r_tail", pe_opts.r_tail, "interpolation rate after the boundary");
    pe_set.bind("--seed", "seed", pe_opts.seed, "seed for random-tail mode");
    pe_set.bind("--scale", "scale", pe_opts.scale, "stddev of random-tail rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scores_cmd->parsed()) {
            scores_set.apply_config();
            return run_scores(scores_opts);
        }
        if (pool_cmd->parsed()) {
            pool_set.apply_config();
            return run_pool(pool_opts);
        }
        if (bench_cmd->parsed()) {
            bench_set.apply_config();
            return run_bench(bench_opts);
        }
        if (cert_cmd->parsed()) {
            cert_set.apply_config();
            return run_certificate(cert_opts);
        }
        if (pe_cmd->parsed()) {
            pe_set.apply_config();
            return run_pe_extend(pe_opts);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
