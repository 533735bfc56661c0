// layerkit command-line tool: validate/render text protocols, compose
// layers, generate synthetic corpora, score predictions, train the toy
// policy, and check the branch-attention numerics.
//
// Exit codes: 0 success, 1 validation/domain error, 2 I/O error,
// 3 internal invariant failure. Machine-readable output goes to stdout,
// diagnostics to stderr.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "layerkit/corpus.hpp"
#include "layerkit/glyph.hpp"
#include "layerkit/grpo.hpp"
#include "layerkit/image_io.hpp"
#include "layerkit/lta.hpp"
#include "layerkit/metrics.hpp"
#include "layerkit/policy.hpp"
#include "layerkit/protocol_json.hpp"
#include "layerkit/render.hpp"
#include "layerkit/reward.hpp"
#include "layerkit/toy_task.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kIoError = 2;
constexpr int kInternalError = 3;

bool verbose() {
    const char* env = std::getenv("LAYERKIT_VERBOSE");
    return env && *env && std::string(env) != "0";
}

void info(const std::string& message) {
    if (verbose()) std::cerr << "layerkit: " << message << "\n";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw layerkit::IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

layerkit::TextProtocol load_protocol(const std::string& path) {
    return layerkit::parse_protocol(slurp(path));
}

layerkit::RewardWeights parse_weights(const std::string& spec) {
    double a = 0, b = 0, c = 0;
    char comma1 = 0, comma2 = 0;
    std::istringstream ss(spec);
    ss >> a >> comma1 >> b >> comma2 >> c;
    if (!ss || comma1 != ',' || comma2 != ',') {
        throw layerkit::RangeError("weights must be 'pix,loc,sem'");
    }
    return layerkit::RewardWeights::normalized(a, b, c);
}

std::pair<int, int> parse_size(const std::string& spec) {
    const auto x = spec.find('x');
    if (x == std::string::npos) throw layerkit::RangeError("size must be WxH");
    const int w = std::stoi(spec.substr(0, x));
    const int h = std::stoi(spec.substr(x + 1));
    return {w, h};
}

int cmd_validate(const std::string& protocol_path) {
    const layerkit::TextProtocol protocol = load_protocol(protocol_path);
    const auto violations = layerkit::validate(protocol);
    for (const layerkit::Violation& v : violations) {
        std::cerr << v.path << ": " << v.message << "\n";
    }
    return violations.empty() ? kOk : kDomainError;
}

int cmd_render(const std::string& protocol_path, const std::string& out_path,
               const std::string& font_source, const std::string& svg_path) {
    if (font_source != "boxfont") {
        throw layerkit::FontNotFound("unknown font source '" + font_source + "'");
    }
    const layerkit::TextProtocol protocol = load_protocol(protocol_path);
    const layerkit::BoxFont font;
    const layerkit::RasterRGBA img = layerkit::render_text_layer(protocol, font);
    layerkit::write_png(out_path, img);
    if (!svg_path.empty()) {
        std::ofstream svg(svg_path, std::ios::binary);
        svg << layerkit::layout_debug_svg(protocol, font);
        if (!svg) throw layerkit::IoError("cannot write '" + svg_path + "'");
    }
    info("rendered " + protocol_path + " -> " + out_path);
    return kOk;
}

int cmd_compose(const std::string& bg_path, const std::string& sticker_path,
                const std::string& text_path, const std::string& out_path) {
    const layerkit::RasterRGBA bg = layerkit::read_png(bg_path);
    const layerkit::RasterRGBA text = layerkit::read_png(text_path);
    layerkit::RasterRGBA sticker = sticker_path.empty()
                                       ? layerkit::RasterRGBA(bg.width, bg.height)
                                       : layerkit::read_png(sticker_path);
    const layerkit::RasterRGBA design =
        layerkit::alpha_over(text, layerkit::alpha_over(sticker, bg));
    layerkit::write_png(out_path, design);
    return kOk;
}

int cmd_gen_corpus(std::uint64_t seed, int count, const std::string& size,
                   const std::string& out_dir, const layerkit::CorpusKnobs& knobs) {
    const auto [w, h] = parse_size(size);
    const auto items = layerkit::generate_corpus(seed, count, w, h, knobs);
    for (const layerkit::CorpusItem& item : items) {
        layerkit::write_corpus_item(std::filesystem::path(out_dir) / item.id, item, knobs);
    }
    info("wrote " + std::to_string(items.size()) + " items to " + out_dir);
    return kOk;
}

int cmd_reward(const std::string& input_path, const std::string& protocol_path,
               const std::string& ref_dir, const std::string& weights_spec) {
    const layerkit::RewardWeights weights = parse_weights(weights_spec);
    const layerkit::TextProtocol pred = load_protocol(protocol_path);
    if (const auto violations = layerkit::validate(pred); !violations.empty()) {
        for (const auto& v : violations) std::cerr << v.path << ": " << v.message << "\n";
        return kDomainError;
    }

    layerkit::RewardContext ctx;
    ctx.input = layerkit::read_png(input_path);
    const std::filesystem::path ref(ref_dir);
    ctx.reference_mask = layerkit::mask_from_alpha(layerkit::read_png(ref / "text.png"), 0);
    const layerkit::TextProtocol ref_protocol = load_protocol((ref / "protocol.json").string());
    for (const layerkit::TextInstance& inst : ref_protocol.instances) {
        ctx.reference_texts.push_back(
            {inst.semantic.text, layerkit::BBox{inst.geometry.x, inst.geometry.y,
                                                inst.geometry.w, inst.geometry.h}});
    }

    const layerkit::BoxFont font;
    const layerkit::RewardBreakdown out = layerkit::score_protocol(pred, ctx, weights, font);
    if (!out.note.empty()) std::cerr << "note: " << out.note << "\n";

    nlohmann::ordered_json j;
    j["r_pix"] = out.r_pix;
    j["r_loc"] = out.r_loc;
    j["r_sem"] = out.r_sem;
    j["total"] = out.total;
    j["weights"] = {out.weights.pix, out.weights.loc, out.weights.sem};
    std::cout << j.dump() << "\n";
    return kOk;
}

int cmd_evaluate(const std::string& pred_dir, const std::string& corpus_dir,
                 const std::string& out_path, const std::string& thresholds_path) {
    layerkit::AttrThresholds thresholds;
    if (!thresholds_path.empty()) {
        thresholds = layerkit::thresholds_from_json(nlohmann::json::parse(slurp(thresholds_path)));
    }
    const auto corpus = layerkit::read_corpus(corpus_dir);

    std::map<std::string, layerkit::LayerPrediction> predictions;
    for (const layerkit::CorpusItem& item : corpus) {
        const std::filesystem::path dir = std::filesystem::path(pred_dir) / item.id;
        if (!std::filesystem::exists(dir / "protocol.json")) {
            throw layerkit::MissingPrediction("no prediction for corpus item '" + item.id + "'");
        }
        layerkit::LayerPrediction pred;
        pred.protocol = load_protocol((dir / "protocol.json").string());
        if (std::filesystem::exists(dir / "sticker.png")) {
            pred.sticker = layerkit::read_png(dir / "sticker.png");
        }
        if (std::filesystem::exists(dir / "bg.png")) {
            pred.background = layerkit::read_png(dir / "bg.png");
        }
        predictions[item.id] = std::move(pred);
    }

    const layerkit::EvalReport report =
        layerkit::evaluate(predictions, corpus, layerkit::BoxFont(), thresholds);
    const auto j = layerkit::report_to_json(report);
    std::ofstream out(out_path, std::ios::binary);
    out << j.dump(2) << "\n";
    if (!out) throw layerkit::IoError("cannot write '" + out_path + "'");

    nlohmann::ordered_json summary = j;
    summary.erase("items");
    std::cout << summary.dump() << "\n";
    return kOk;
}

int cmd_grpo_train(const std::string& corpus_dir, const layerkit::GrpoConfig& cfg, int grid,
                   int vocab_size, const std::string& out_path, const std::string& log_path) {
    const auto corpus = layerkit::read_corpus(corpus_dir);
    std::vector<layerkit::ToyTaskFixture> fixtures;
    layerkit::Rng rng(layerkit::splitmix64(cfg.seed ^ 0x7461736bULL));
    for (const layerkit::CorpusItem& item : corpus) {
        fixtures.push_back(layerkit::fixture_from_item(item, vocab_size, grid, rng));
    }
    const layerkit::BoxFont font;
    const layerkit::RewardFn reward_fn =
        layerkit::toy_reward_fn(fixtures, layerkit::RewardWeights::normalized(1, 1, 1), font);

    std::ofstream log;
    std::ostream* log_stream = nullptr;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::binary);
        if (!log) throw layerkit::IoError("cannot write '" + log_path + "'");
        log_stream = &log;
    }
    const layerkit::TrainResult result =
        layerkit::train(layerkit::tasks_of(fixtures), cfg, reward_fn, log_stream);

    std::ofstream out(out_path, std::ios::binary);
    out << layerkit::policy_to_json(result.policy).dump(2) << "\n";
    if (!out) throw layerkit::IoError("cannot write '" + out_path + "'");
    if (!result.log.empty()) {
        info("final mean reward " + std::to_string(result.log.back().mean_reward));
    }
    return kOk;
}

int cmd_lta_check(int n, int d, int heads, std::uint64_t seed) {
    if (n < 1 || d < 1 || heads < 1 || d % heads != 0) {
        throw layerkit::StructureMismatch("need n >= 1 and d a positive multiple of heads");
    }
    const layerkit::GradCheckReport report = layerkit::lta_grad_check(n, d, heads, seed);
    const bool pass = report.max_error() <= 1e-4;
    nlohmann::ordered_json j;
    j["n"] = n;
    j["d"] = d;
    j["heads"] = heads;
    j["seed"] = seed;
    j["max_rel_err"] = {{"tokens", report.tokens}, {"wq", report.wq},   {"wk", report.wk},
                        {"wv", report.wv},         {"wo", report.wo},   {"gates", report.gates}};
    j["pass"] = pass;
    std::cout << j.dump() << "\n";
    return pass ? kOk : kDomainError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"text rendering protocol toolkit"};
    app.require_subcommand(1);

    std::string protocol_path, out_path, font_source = "boxfont", svg_path;
    auto* validate_cmd = app.add_subcommand("validate", "check a protocol file");
    validate_cmd->add_option("--protocol", protocol_path, "protocol JSON")->required();

    auto* render_cmd = app.add_subcommand("render", "render a protocol to a PNG text layer");
    render_cmd->add_option("--protocol", protocol_path, "protocol JSON")->required();
    render_cmd->add_option("--out", out_path, "output PNG")->required();
    render_cmd->add_option("--font-source", font_source, "glyph source (boxfont)");
    render_cmd->add_option("--svg", svg_path, "optional layout debug SVG");

    std::string bg_path, sticker_path, text_path;
    auto* compose_cmd = app.add_subcommand("compose", "composite text/sticker/background layers");
    compose_cmd->add_option("--bg", bg_path, "background PNG")->required();
    compose_cmd->add_option("--sticker", sticker_path, "sticker PNG (omit for transparent)");
    compose_cmd->add_option("--text", text_path, "text layer PNG")->required();
    compose_cmd->add_option("--out", out_path, "output PNG")->required();

    std::uint64_t seed = 42;
    int count = 1;
    std::string size = "512x512", out_dir;
    layerkit::CorpusKnobs knobs;
    auto* gen_cmd = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    gen_cmd->add_option("--seed", seed, "generator seed");
    gen_cmd->add_option("--count", count, "number of items")->required();
    gen_cmd->add_option("--size", size, "canvas WxH");
    gen_cmd->add_option("--out", out_dir, "output directory")->required();
    gen_cmd->add_option("--min-instances", knobs.min_instances, "min text instances per item");
    gen_cmd->add_option("--max-instances", knobs.max_instances, "max text instances per item");
    gen_cmd->add_option("--curve-fraction", knobs.curve_fraction, "fraction of curved instances");
    gen_cmd->add_option("--max-stickers", knobs.max_stickers, "max sticker primitives");

    std::string input_path, ref_dir, weights_spec = "1,1,1";
    auto* reward_cmd = app.add_subcommand("reward", "score a protocol against a reference item");
    reward_cmd->add_option("--input", input_path, "input design PNG")->required();
    reward_cmd->add_option("--protocol", protocol_path, "predicted protocol JSON")->required();
    reward_cmd->add_option("--ref", ref_dir, "reference corpus item directory")->required();
    reward_cmd->add_option("--weights", weights_spec, "pix,loc,sem weights");

    std::string pred_dir, corpus_dir, thresholds_path;
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate predictions against a corpus");
    eval_cmd->add_option("--pred", pred_dir, "predictions directory")->required();
    eval_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
    eval_cmd->add_option("--out", out_path, "report JSON path")->required();
    eval_cmd->add_option("--thresholds", thresholds_path, "attribute thresholds JSON");

    layerkit::GrpoConfig cfg;
    int grid = 8, vocab_size = 8;
    std::string policy_path, log_path;
    auto* train_cmd = app.add_subcommand("grpo-train", "train the toy protocol policy");
    train_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
    train_cmd->add_option("--steps", cfg.total_steps, "total optimization steps");
    train_cmd->add_option("--group", cfg.group_size, "group size K");
    train_cmd->add_option("--lr", cfg.learning_rate, "learning rate");
    train_cmd->add_option("--batch", cfg.batch_size, "mini-batch size");
    train_cmd->add_option("--clip", cfg.clip_eps, "clipping threshold");
    train_cmd->add_option("--kl", cfg.kl_beta, "KL regularization strength");
    train_cmd->add_option("--temp", cfg.temperature, "sampling temperature");
    train_cmd->add_option("--inner-epochs", cfg.inner_epochs, "surrogate reuse epochs");
    train_cmd->add_option("--seed", cfg.seed, "training seed");
    train_cmd->add_option("--grid", grid, "placement grid size");
    train_cmd->add_option("--vocab-size", vocab_size, "candidate vocabulary size");
    train_cmd->add_option("--out", policy_path, "policy checkpoint JSON")->required();
    train_cmd->add_option("--log", log_path, "training log JSONL");

    int lta_n = 4, lta_d = 8, lta_heads = 2;
    std::uint64_t lta_seed = 7;
    auto* lta_cmd = app.add_subcommand("lta-check", "branch-attention gradient check");
    lta_cmd->add_option("--n", lta_n, "positions");
    lta_cmd->add_option("--d", lta_d, "feature dimension");
    lta_cmd->add_option("--heads", lta_heads, "attention heads");
    lta_cmd->add_option("--seed", lta_seed, "rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kDomainError;
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(protocol_path);
        if (render_cmd->parsed()) return cmd_render(protocol_path, out_path, font_source, svg_path);
        if (compose_cmd->parsed()) return cmd_compose(bg_path, sticker_path, text_path, out_path);
        if (gen_cmd->parsed()) return cmd_gen_corpus(seed, count, size, out_dir, knobs);
        if (reward_cmd->parsed()) {
            return cmd_reward(input_path, protocol_path, ref_dir, weights_spec);
        }
        if (eval_cmd->parsed()) {
            return cmd_evaluate(pred_dir, corpus_dir, out_path, thresholds_path);
        }
        if (train_cmd->parsed()) {
            return cmd_grpo_train(corpus_dir, cfg, grid, vocab_size, policy_path, log_path);
        }
        if (lta_cmd->parsed()) return cmd_lta_check(lta_n, lta_d, lta_heads, lta_seed);
        return kDomainError;
    } catch (const layerkit::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const layerkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomainError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}
