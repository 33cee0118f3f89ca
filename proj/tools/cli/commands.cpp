#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ssrgan/checkpoint.hpp"
#include "ssrgan/pipeline.hpp"
#include "ssrgan/verify.hpp"

namespace fs = std::filesystem;

namespace ssrgan::cli {
namespace {

fs::path prepare_out(const RunConfig& cfg) {
    const fs::path out = cfg.path("out");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error("cli", "cannot create output directory " + out.string() + ": " + ec.message());
    write_json_file(Json(cfg), (out / "config.json").string());
    return out;
}

void write_summary(const fs::path& out, const std::string& text, std::ostream& log) {
    std::ofstream os(out / "summary.txt");
    if (!os) throw Error("cli", "cannot write " + (out / "summary.txt").string());
    os << text;
    log << text;
}

std::string ext_of(const std::string& path) {
    return format_for_path(path) == RecordingFormat::csv ? ".csv" : ".f32";
}

WindowedDataset segment_for(const ModelConfig& mc, const Recording& rec, std::optional<double> scale,
                            const std::string& id) {
    return segment(rec, static_cast<double>(mc.window_length) / rec.sample_rate_hz, scale, id);
}

Recording synth_file(const fs::path& dir, const std::string& name) { return read_recording((dir / name).string()); }

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::string report_text(const MetricsReport& r) {
    std::ostringstream os;
    os << "channels " << r.channels << "\ninps_db " << fmt(r.inps_db) << "\nptpr " << fmt(r.ptpr) << '\n';
    if (r.clean_correlation) os << "clean_correlation " << fmt(*r.clean_correlation) << '\n';
    return os.str();
}

void write_matrix_csv(const std::string& path, const Tensor<double>& t) {
    std::ofstream os(path);
    if (!os) throw Error("cli", "cannot write " + path);
    os << "window,channel";
    for (std::size_t l = 0; l < t.shape().length; ++l) os << ",t" << l;
    os << '\n' << std::setprecision(9);
    for (std::size_t n = 0; n < t.shape().batch; ++n) {
        for (std::size_t c = 0; c < t.shape().channels; ++c) {
            os << n << ',' << c;
            for (std::size_t l = 0; l < t.shape().length; ++l) os << ',' << t.at(n, c, l);
            os << '\n';
        }
    }
}

} // namespace

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
    const fs::path out = prepare_out(cfg);
    const SynthDatasets ds = make_datasets(cfg.synth, cfg.data.n_train_a, cfg.data.n_train_b, cfg.data.n_eval);
    write_recording(stitch(ds.a), (out / "train_a.csv").string());
    write_recording(stitch(ds.b), (out / "train_b.csv").string());
    write_recording(ds.eval.contaminated, (out / "eval_contaminated.csv").string());
    write_recording(ds.eval.clean, (out / "eval_clean.csv").string());
    write_recording(ds.eval.artifact, (out / "eval_artifact.csv").string());
    write_json_file(ds.manifest, (out / "manifest.json").string());
    const MetricsReport headroom = evaluate(ds.eval.contaminated, ds.eval.clean);
    std::ostringstream s;
    s << "synth seed " << cfg.synth.seed << "\nwindows A " << ds.a.size() << ", B " << ds.b.size() << ", eval "
      << ds.eval_contaminated.size() << "\nscale " << fmt(ds.scale) << "\nheadroom (contaminated vs clean): inps_db "
      << fmt(headroom.inps_db) << ", ptpr " << fmt(headroom.ptpr) << '\n';
    write_summary(out, s.str(), log);
    return kExitOk;
}

int cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
    const std::string input = cfg.path("input");
    const Recording raw = read_recording(input);
    const PreprocessConfig& p = cfg.preprocess;
    const Recording filtered = bandpass(raw, p.band_lo_hz, p.band_hi_hz);
    const Recording resampled = resample(filtered, p.target_rate_hz);
    const WindowedDataset ds = segment(resampled, p.window_s, std::nullopt, fs::path(input).stem().string());
    const fs::path out = prepare_out(cfg);
    const std::string name = "preprocessed" + ext_of(input);
    write_recording(resampled, (out / name).string());
    std::ostringstream s;
    s << "input " << input << " (" << raw.channels() << " ch, " << fmt(raw.sample_rate_hz) << " Hz, "
      << raw.length() << " samples)\nband " << fmt(p.band_lo_hz) << "-" << fmt(p.band_hi_hz) << " Hz, rate "
      << fmt(p.target_rate_hz) << " Hz\nwindows " << ds.size() << " x " << ds.window_length() << ", robust scale "
      << fmt(ds.scale) << "\nwrote " << name << '\n';
    write_summary(out, s.str(), log);
    return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
    const fs::path data = cfg.path("data");
    const Recording rec_a = synth_file(data, "train_a.csv");
    const Recording rec_b = synth_file(data, "train_b.csv");
    const WindowedDataset a = segment_for(cfg.model, rec_a, std::nullopt, "train_a");
    const WindowedDataset b = segment_for(cfg.model, rec_b, a.scale, "train_b");
    const fs::path out = prepare_out(cfg);

    Model<float> model(cfg.model, cfg.train.seed);
    model.normalization_scale = a.scale;
    const TrainHistory h = train(model, a.windows.cast<float>(), b.windows.cast<float>(), cfg.train,
                                 [&](const IterationRecord& r) {
                                     if (r.iteration % 100 == 0 || r.iteration == cfg.train.iterations) {
                                         log << "iter " << r.iteration << " cycle " << fmt(r.cycle) << " gan_g "
                                             << fmt(r.gan_g) << " gan_d " << fmt(r.gan_d) << '\n';
                                     }
                                 });
    save_checkpoint(model, (out / "checkpoint.ssrg").string());
    h.write_csv((out / "history.csv").string());
    std::ostringstream s;
    s << "preset " << cfg.preset.value_or("none") << "\niterations " << h.records.size() << "\ngenerator updates "
      << h.generator_updates() << "\ndiscriminator updates " << h.discriminator_updates()
      << "\nfinal cycle (mean of last 100) " << fmt(tail_mean(h, &IterationRecord::cycle, 100)) << '\n';
    write_summary(out, s.str(), log);
    return kExitOk;
}

int cmd_denoise(const RunConfig& cfg, std::ostream& log) {
    Model<float> model = load_checkpoint<float>(cfg.path("checkpoint"));
    const std::string input = cfg.path("input");
    const Recording rec = read_recording(input);
    const Recording clean = denoise_recording(model, rec);
    const fs::path out = prepare_out(cfg);
    const std::string name = "denoised" + ext_of(input);
    write_recording(clean, (out / name).string());
    std::ostringstream s;
    s << "input " << input << "\nwindows " << clean.length() / model.config().window_length << " per channel\nwrote "
      << name << '\n';
    write_summary(out, s.str(), log);
    return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
    Recording before;
    std::optional<Recording> clean;
    if (cfg.has_path("before")) {
        before = read_recording(cfg.path("before"));
        if (cfg.has_path("clean")) clean = read_recording(cfg.path("clean"));
    } else if (cfg.has_path("data")) {
        before = synth_file(cfg.path("data"), "eval_contaminated.csv");
        clean = synth_file(cfg.path("data"), "eval_clean.csv");
    } else {
        throw ConfigError("cli", "eval needs --before or --data");
    }

    std::string method;
    Recording after;
    if (cfg.baseline) {
        after = aas_baseline(before, cfg.aas).cleaned;
        method = "aas";
    } else if (cfg.has_path("after")) {
        after = read_recording(cfg.path("after"));
        method = "file";
    } else if (cfg.has_path("checkpoint")) {
        Model<float> model = load_checkpoint<float>(cfg.path("checkpoint"));
        after = denoise_recording(model, before);
        method = "checkpoint";
    } else {
        throw ConfigError("cli", "eval needs --after, --checkpoint or --baseline aas");
    }
    const std::size_t len = std::min(before.length(), after.length());
    before = crop(before, len);
    after = crop(after, len);
    if (clean) clean = crop(*clean, len);

    const MetricsReport report = evaluate(before, after, clean);
    const fs::path out = prepare_out(cfg);
    Json j = report.to_json();
    j["method"] = method;
    write_json_file(j, (out / "metrics.json").string());
    report.write_psd_csv((out / "psd_ch").string());
    if (method != "file") write_recording(after, (out / "after.csv").string());
    write_summary(out, "method " + method + "\n" + report_text(report), log);
    return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& log) {
    const fs::path out = prepare_out(cfg);
    GradientSuiteOptions opts;
    opts.seeds = cfg.gradcheck.seeds;
    opts.eps = cfg.gradcheck.eps;
    opts.tolerance = cfg.gradcheck.tolerance;
    opts.default_model_coords = cfg.gradcheck.default_model_coords;
    auto echo_failures = [&](const CheckOutcome& c) {
        if (!c.passed) log << "FAIL " << c.name << " " << c.value << " > " << c.tolerance << " (" << c.detail << ")\n";
    };
    const SuiteReport grad = gradient_suite(opts, echo_failures);
    const SuiteReport rev = reversibility_suite(cfg.gradcheck.seeds.front(), cfg.gradcheck.adjoint_tolerance,
                                                echo_failures);
    Json j = Json::array();
    for (const SuiteReport* r : {&grad, &rev}) {
        for (const auto& c : r->checks) {
            j.push_back({{"name", c.name},
                         {"passed", c.passed},
                         {"value", c.value},
                         {"tolerance", c.tolerance},
                         {"detail", c.detail}});
        }
    }
    write_json_file(j, (out / "gradcheck.json").string());
    std::ostringstream s;
    s << "gradient checks " << grad.checks.size() << ", failures " << grad.failures() << ", worst "
      << grad.worst() << "\nreversibility checks " << rev.checks.size() << ", failures " << rev.failures()
      << ", worst adjoint gap " << rev.worst("adjoint/") << '\n';
    write_summary(out, s.str(), log);
    return grad.passed() && rev.passed() ? kExitOk : kExitRuntime;
}

int cmd_features(const RunConfig& cfg, std::ostream& log) {
    Model<float> model = load_checkpoint<float>(cfg.path("checkpoint"));
    const Recording rec = read_recording(cfg.path("input"));
    const WindowedDataset ds = segment_for(model.config(), rec, model.normalization_scale, "features");
    const Tensor<float> x = ds.windows.cast<float>();
    const fs::path out = prepare_out(cfg);
    write_matrix_csv((out / "phi1.csv").string(), middle_content(model, x, Side::A).cast<double>());
    write_matrix_csv((out / "phi2.csv").string(), middle_content(model, x, Side::B).cast<double>());
    std::ostringstream s;
    s << "windows " << ds.size() << "\nfeature map " << model.config().blocks[2].out_channels << " x "
      << model.config().middle_length() << "\nwrote phi1.csv (G_f prefix), phi2.csv (G_r prefix)\n";
    write_summary(out, s.str(), log);
    return kExitOk;
}

namespace {

struct Parsed {
    std::string config_file;
    std::string preset;
    std::string baseline;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iterations;
    std::map<std::string, std::string> paths;
    std::map<std::string, std::string> overrides;
};

RunConfig build_config(const Parsed& p, const std::vector<FlagSpec>& flags) {
    Json file = Json::object();
    if (!p.config_file.empty()) file = read_json_file(p.config_file);
    if (!file.is_object()) throw ConfigError("cli", p.config_file + ": config must be a JSON object");

    RunConfig base;
    std::string preset = p.preset;
    if (preset.empty() && file.contains("preset") && file["preset"].is_string()) preset = file["preset"];
    if (!preset.empty()) apply_preset(base, preset);

    Json j = base;
    j.merge_patch(file);
    if (!preset.empty()) j["preset"] = preset;
    for (const auto& [key, value] : p.paths) j["paths"][key] = value;
    if (!p.baseline.empty()) j["baseline"] = p.baseline;
    RunConfig cfg = j.get<RunConfig>();
    j = cfg;
    if (p.seed) {
        j["synth"]["seed"] = *p.seed;
        j["train"]["seed"] = *p.seed;
    }
    if (p.iterations) j["train"]["iterations"] = *p.iterations;
    for (const FlagSpec& f : flags) {
        auto it = p.overrides.find(f.flag);
        if (it != p.overrides.end()) apply_override(j, f, it->second);
    }
    cfg = j.get<RunConfig>();
    cfg.validate();
    return cfg;
}

} // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ssrgan: reversible-generator BCG artifact removal toolkit"};
    app.require_subcommand(1);
    const std::vector<FlagSpec> flags = override_flags();
    Parsed parsed;

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const RunConfig&, std::ostream&);
        std::vector<std::string> paths;
    };
    const std::vector<Sub> subs{
        {"synth", "generate A/B/eval datasets and a manifest", cmd_synth, {}},
        {"preprocess", "band-pass, resample and window a recording", cmd_preprocess, {"input"}},
        {"train", "train a model (checkpoint + loss history)", cmd_train, {"data"}},
        {"denoise", "denoise a recording with a checkpoint", cmd_denoise, {"checkpoint", "input"}},
        {"eval", "score before/after recordings, a checkpoint, or the AAS baseline", cmd_eval,
         {"before", "after", "clean", "data", "checkpoint"}},
        {"gradcheck", "finite-difference and adjoint verification suites", cmd_gradcheck, {}},
        {"features", "export middle-content feature maps", cmd_features, {"checkpoint", "input"}},
    };

    std::map<std::string, std::string> flag_values;
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--out", parsed.paths["out"], "output directory")->group("Paths");
        for (const auto& key : s.paths) {
            sub->add_option("--" + key, parsed.paths[key], "path: " + key)->group("Paths");
        }
        sub->add_option("--config", parsed.config_file, "JSON run config (unknown keys rejected)");
        sub->add_option("--seed", parsed.seed, "sets synth.seed and train.seed");
        if (std::string(s.name) == "train") {
            sub->add_option("--preset", parsed.preset, "ablation preset model1..model6");
            sub->add_option("--iterations", parsed.iterations, "train.iterations");
        }
        if (std::string(s.name) == "eval") {
            sub->add_option("--baseline", parsed.baseline, "score a classical baseline instead (aas)");
        }
        for (const FlagSpec& f : flags) {
            sub->add_option("--" + f.flag, flag_values[f.flag], f.help)->group("Config overrides");
        }
    }

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    // Only keep what was actually given on the command line.
    for (auto it = parsed.paths.begin(); it != parsed.paths.end();) {
        it = it->second.empty() ? parsed.paths.erase(it) : std::next(it);
    }
    for (const auto& [k, v] : flag_values) {
        if (!v.empty()) parsed.overrides[k] = v;
    }

    CLI::App* chosen = app.get_subcommands().front();
    const Sub* sub = nullptr;
    for (const Sub& s : subs) {
        if (chosen->get_name() == s.name) sub = &s;
    }
    try {
        const RunConfig cfg = build_config(parsed, flags);
        return sub->fn(cfg, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace ssrgan::cli
