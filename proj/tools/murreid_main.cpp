// murreid: Finnish dialect identification toolkit.
// Subcommands: split, train, eval, predict, serve, synth.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "murreid/corpus.hpp"
#include "murreid/models.hpp"
#include "murreid/service.hpp"
#include "murreid/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace murreid;

namespace {

uint64_t default_seed() {
    if (const char* env = std::getenv("MURREID_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::runtime_error("MURREID_SEED is not an unsigned integer: " + std::string(env));
        }
    }
    return 42;
}

std::string resolve_audio_path(const std::string& manifest_path, const std::string& audio_path) {
    fs::path p(audio_path);
    if (p.is_absolute() || fs::exists(p)) return audio_path;
    return (fs::path(manifest_path).parent_path() / p).string();
}

struct SplitSets {
    std::vector<Utterance> train, val, test;
};

SplitSets partition_manifest(const std::vector<Utterance>& utts, const SplitManifest& sm) {
    std::unordered_map<std::string, const Utterance*> by_id;
    for (const Utterance& u : utts) by_id.emplace(u.id, &u);
    SplitSets sets;
    for (const auto& [id, part] : sm.assignment) {
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw std::runtime_error("split references id '" + id + "' that is not in the manifest");
        switch (part) {
            case Partition::Train: sets.train.push_back(*it->second); break;
            case Partition::Val: sets.val.push_back(*it->second); break;
            case Partition::Test: sets.test.push_back(*it->second); break;
        }
    }
    return sets;
}

std::array<double, 3> parse_ratios(const std::vector<double>& r) {
    if (r.size() != 3) throw std::runtime_error("--ratios needs exactly three values");
    return {r[0], r[1], r[2]};
}

ordered_json report_to_json(const TrainReport& rep, const std::string& kind,
                            const std::string& bundle_path) {
    return ordered_json{{"model_kind", kind},
                        {"epochs", rep.config.epochs},
                        {"learning_rate", rep.config.learning_rate},
                        {"batch_size", rep.config.batch_size},
                        {"optimizer", nn::to_string(rep.config.optimizer)},
                        {"seed", rep.config.seed},
                        {"max_steps", rep.config.max_steps},
                        {"steps_executed", rep.steps},
                        {"selected_epoch", rep.selected_epoch},
                        {"train_loss", rep.train_loss},
                        {"val_accuracy", rep.val_accuracy},
                        {"bundle", bundle_path}};
}

int run(int argc, char** argv) {
    CLI::App app{"murreid - multimodal Finnish dialect identification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value configuration file");

    // split
    auto* cmd_split = app.add_subcommand("split", "assign utterances to train/val/test");
    std::string split_manifest, split_out;
    std::vector<double> split_ratios{0.70, 0.15, 0.15};
    uint64_t split_seed = default_seed();
    std::string split_mode = "random-sentence";
    double max_duration = 0.0;
    cmd_split->add_option("--manifest", split_manifest, "corpus manifest TSV")->required();
    cmd_split->add_option("--out", split_out, "output split TSV")->required();
    cmd_split->add_option("--ratios", split_ratios, "train,val,test fractions")->delimiter(',')->expected(3);
    cmd_split->add_option("--seed", split_seed, "shuffle seed");
    cmd_split->add_option("--mode", split_mode, "random-sentence | speaker-disjoint");
    cmd_split->add_option("--max-duration", max_duration,
                          "drop utterances at or above this many seconds first (0 = keep all)");

    // train
    auto* cmd_train = app.add_subcommand("train", "train a text or fusion model");
    std::string train_manifest, train_split, train_out, model_kind = "text";
    nn::TrainConfig tc;
    tc.seed = default_seed();
    std::string optimizer = "adam";
    cmd_train->add_option("--manifest", train_manifest, "corpus manifest TSV")->required();
    cmd_train->add_option("--split", train_split, "split TSV from 'split'")->required();
    cmd_train->add_option("--out", train_out, "output model bundle")->required();
    cmd_train->add_option("--model-kind", model_kind, "text | fusion");
    cmd_train->add_option("--epochs", tc.epochs, "training epochs");
    cmd_train->add_option("--lr", tc.learning_rate, "learning rate");
    cmd_train->add_option("--batch-size", tc.batch_size, "mini-batch size");
    cmd_train->add_option("--max-steps", tc.max_steps, "optimizer step cap");
    cmd_train->add_option("--optimizer", optimizer, "adam | sgd");
    cmd_train->add_option("--seed", tc.seed, "training seed");

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a bundle on the test partition");
    std::string eval_manifest, eval_split, eval_bundle, eval_style = "tsv";
    bool full_precision = false;
    cmd_eval->add_option("--manifest", eval_manifest, "corpus manifest TSV")->required();
    cmd_eval->add_option("--split", eval_split, "split TSV")->required();
    cmd_eval->add_option("--bundle", eval_bundle, "model bundle")->required();
    cmd_eval->add_option("--style", eval_style, "tsv | table");
    cmd_eval->add_flag("--full-precision", full_precision, "unrounded metric values (tsv)");

    // predict
    auto* cmd_predict = app.add_subcommand("predict", "classify one transcript (+ optional WAV)");
    std::string pred_bundle, pred_transcript, pred_wav;
    cmd_predict->add_option("--bundle", pred_bundle, "model bundle")->required();
    cmd_predict->add_option("--transcript", pred_transcript, "dialectal transcript")->required();
    cmd_predict->add_option("--wav", pred_wav, "path to a WAV file");

    // serve
    auto* cmd_serve = app.add_subcommand("serve", "HTTP inference endpoint");
    std::string serve_bundle, host = "127.0.0.1";
    int port = 8080;
    cmd_serve->add_option("--bundle", serve_bundle, "model bundle")->required();
    cmd_serve->add_option("--host", host, "bind address");
    cmd_serve->add_option("--port", port, "bind port");

    // synth
    auto* cmd_synth = app.add_subcommand("synth", "generate a controlled synthetic corpus");
    SynthConfig sc;
    sc.seed = default_seed();
    std::string out_dir, placement = "split";
    cmd_synth->add_option("--out-dir", out_dir, "output directory")->required();
    cmd_synth->add_option("--classes", sc.n_classes, "number of classes (first N dialects)");
    cmd_synth->add_option("--per-class", sc.utterances_per_class, "utterances per class");
    cmd_synth->add_option("--placement", placement, "text | audio | both | split");
    cmd_synth->add_option("--p-text", sc.p_text, "text marker probability");
    cmd_synth->add_option("--seed", sc.seed, "generator seed");
    cmd_synth->add_option("--duration-min", sc.duration_min_s, "min utterance seconds");
    cmd_synth->add_option("--duration-max", sc.duration_max_s, "max utterance seconds");
    cmd_synth->add_option("--tone-amplitude", sc.tone_amplitude, "class tone amplitude");
    cmd_synth->add_option("--noise-amplitude", sc.noise_amplitude, "background noise amplitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (cmd_split->parsed()) {
        std::vector<Utterance> utts = parse_manifest_file(split_manifest);
        if (max_duration > 0.0) utts = filter_by_duration(utts, max_duration);
        SplitManifest sm = split(utts, parse_ratios(split_ratios), split_seed,
                                 split_mode_from_string(split_mode));
        write_split_file(split_out, sm);
        auto counts = sm.counts();
        std::cout << "train=" << counts[0] << " val=" << counts[1] << " test=" << counts[2]
                  << " seed=" << split_seed << " mode=" << split_mode << "\n";
        return 0;
    }

    if (cmd_train->parsed()) {
        tc.optimizer = nn::optimizer_from_string(optimizer);
        std::vector<Utterance> utts = parse_manifest_file(train_manifest);
        SplitSets sets = partition_manifest(utts, read_split_file(train_split));
        const ModelKind kind = model_kind_from_string(model_kind);
        TrainReport rep;
        if (kind == ModelKind::Fusion) {
            for (auto* list : {&sets.train, &sets.val})
                for (Utterance& u : *list)
                    u.audio_path = resolve_audio_path(train_manifest, u.audio_path);
            auto [model, r] = train_fusion(sets.train, sets.val, tc);
            save_bundle(bundle_from(std::move(model)), train_out);
            rep = std::move(r);
        } else {
            auto [model, r] = train_text_only(sets.train, sets.val, tc);
            save_bundle(bundle_from(std::move(model)), train_out);
            rep = std::move(r);
        }
        std::cout << report_to_json(rep, model_kind, train_out).dump(2) << "\n";
        return 0;
    }

    if (cmd_eval->parsed()) {
        std::vector<Utterance> utts = parse_manifest_file(eval_manifest);
        SplitSets sets = partition_manifest(utts, read_split_file(eval_split));
        if (sets.test.empty()) throw std::runtime_error("test partition is empty");
        ModelBundle bundle = load_bundle(eval_bundle);
        if (bundle.kind == ModelKind::Fusion)
            for (Utterance& u : sets.test)
                u.audio_path = resolve_audio_path(eval_manifest, u.audio_path);
        EvalReport report = evaluate_bundle(bundle, sets.test);
        ReportStyle style = eval_style == "table" ? ReportStyle::Table : ReportStyle::Tsv;
        std::cout << render_report(report, bundle.registry, style, full_precision);
        return 0;
    }

    if (cmd_predict->parsed()) {
        ModelBundle bundle = load_bundle(pred_bundle);
        std::optional<Waveform> audio;
        if (!pred_wav.empty()) audio = decode_wav(pred_wav);
        Prediction pred = predict(bundle, pred_transcript, audio);
        std::vector<size_t> idx(pred.scores.size());
        std::iota(idx.begin(), idx.end(), size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](size_t a, size_t b) { return pred.scores[a] > pred.scores[b]; });
        ordered_json top5 = ordered_json::array();
        for (size_t i = 0; i < std::min<size_t>(5, idx.size()); ++i)
            top5.push_back(ordered_json{
                {"code", bundle.registry.at(static_cast<int>(idx[i])).code},
                {"score", pred.scores[idx[i]]}});
        std::cout << ordered_json{{"dialect", pred.label.name},
                                  {"code", pred.label.code},
                                  {"top5", std::move(top5)}}
                         .dump(2)
                  << "\n";
        return 0;
    }

    if (cmd_serve->parsed()) {
        ModelBundle bundle = load_bundle(serve_bundle);
        std::cerr << "listening on " << host << ":" << port << "\n";
        run_server(bundle, host, port);
        return 0;
    }

    if (cmd_synth->parsed()) {
        sc.placement = placement_from_string(placement);
        SynthResult result = generate(sc, out_dir);
        ordered_json signals = ordered_json::array();
        for (const ClassSignal& s : describe(sc))
            signals.push_back(ordered_json{{"class", s.class_index},
                                           {"code", s.code},
                                           {"text_separable", s.text_separable},
                                           {"audio_separable", s.audio_separable}});
        std::cout << ordered_json{{"manifest", result.manifest_path},
                                  {"utterances", result.utterances.size()},
                                  {"classes", sc.n_classes},
                                  {"placement", placement},
                                  {"signals", std::move(signals)}}
                         .dump(2)
                  << "\n";
        return 0;
    }

    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
