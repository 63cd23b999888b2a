#include "hmdn/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "hmdn/config.h"
#include "hmdn/eval.h"
#include "hmdn/gradcheck.h"
#include "hmdn/net.h"
#include "hmdn/synthdata.h"
#include "hmdn/visibility.h"

namespace hmdn {

namespace fs = std::filesystem;

namespace {

// Sub-streams of run.seed used by each command.
constexpr std::uint64_t kGenTrainStream = 1;
constexpr std::uint64_t kGenTestStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kEvalStream = 4;
constexpr std::uint64_t kSampleStream = 5;
constexpr std::uint64_t kGradcheckStream = 6;

class VerificationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::map<std::string, std::vector<std::string>>& schema() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"run", {"seed", "out"}},
        {"gen", {"generator", "n_train", "n_test", "noise_std", "x_occ", "m_occ"}},
        {"label",
         {"dataset", "tau_pix", "size", "capsule_radius", "sphere_radius", "finger_depth",
          "occluder_depth", "x_occ", "max_surface_distance", "export_images"}},
        {"camera", {"fx", "fy", "cx", "cy", "projection"}},
        {"train",
         {"dataset", "mode", "epochs", "batch_size", "lr", "beta1", "beta2", "eps_adam", "components",
          "hidden", "s_floor", "eps_w", "sgn_multi_label", "average_labels"}},
        {"eval",
         {"model", "dataset", "repeats", "ks", "set_samples", "threshold_max", "threshold_steps",
          "deterministic"}},
        {"sample", {"model", "dataset", "count", "examples", "sample_mode"}},
        {"gradcheck", {"draws", "step", "head_tolerance", "weight_tolerance", "modes", "sabotage"}},
    };
    return keys;
}

std::set<std::string> allowed_keys() {
    std::set<std::string> out;
    for (const auto& [section, keys] : schema())
        for (const auto& k : keys) out.insert(section + "." + k);
    return out;
}

struct RunContext {
    std::string command;
    Config input;
    Config resolved;
    fs::path out_dir;
    std::uint64_t seed = 0;
    bool overwrite = false;
    std::vector<fs::path> inputs;
    std::ostream* out = nullptr;

    Resolver resolver() { return Resolver(input, resolved); }

    fs::path output(const std::string& name) const { return out_dir / name; }

    fs::path input_file(const std::string& key) {
        const fs::path p = resolver().str(key);
        if (!fs::is_regular_file(p)) throw ConfigError(key + ": no such file '" + p.string() + "'");
        inputs.push_back(p);
        return p;
    }

    /// Refuses to clobber existing outputs without --overwrite and never
    /// writes over an input file.
    void claim_outputs(const std::vector<std::string>& names) {
        std::vector<std::string> all = names;
        all.push_back(command + ".resolved.ini");
        for (const auto& name : all) {
            const fs::path p = output(name);
            if (!fs::exists(p)) continue;
            for (const auto& in : inputs)
                if (fs::equivalent(p, in))
                    throw ConfigError("output " + p.string() + " would overwrite an input file");
            if (!overwrite)
                throw ConfigError("output " + p.string() + " exists; pass --overwrite to replace it");
        }
        fs::create_directories(out_dir);
        std::ofstream cfg(output(command + ".resolved.ini"));
        if (!cfg) throw std::runtime_error("cannot write " + output(command + ".resolved.ini").string());
        resolved.write(cfg);
    }
};

template <typename T>
T positive(T value, const std::string& key) {
    if (!(value > 0)) throw ConfigError(key + " must be positive");
    return value;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f.precision(17);
    return f;
}

// --- gen -----------------------------------------------------------------------

int cmd_gen(RunContext& ctx) {
    Resolver r = ctx.resolver();
    const std::string generator = r.str("gen.generator", std::string("finger"));
    if (generator != "finger" && generator != "inverse-sine")
        throw ConfigError("gen.generator must be finger or inverse-sine");
    const long long n_train = positive(r.integer("gen.n_train", 10000), "gen.n_train");
    const long long n_test = positive(r.integer("gen.n_test", 2000), "gen.n_test");
    const bool finger = generator == "finger";
    const double noise = r.real("gen.noise_std", finger ? 0.01 : 0.05);
    if (!(noise >= 0.0)) throw ConfigError("gen.noise_std must be >= 0");

    FingerOptions options;
    options.noise_std = noise;
    if (finger) {
        options.x_occ = r.real("gen.x_occ", options.x_occ);
        options.m_occ = static_cast<int>(positive(r.integer("gen.m_occ", options.m_occ), "gen.m_occ"));
    }
    ctx.claim_outputs({"train.txt", "test.txt"});

    const std::uint64_t train_seed = Rng::split(ctx.seed, kGenTrainStream);
    const std::uint64_t test_seed = Rng::split(ctx.seed, kGenTestStream);
    const auto make = [&](long long n, std::uint64_t seed) {
        return finger ? gen_finger_dataset(static_cast<int>(n), options, seed)
                      : gen_inverse_sine(static_cast<int>(n), noise, seed);
    };
    const Dataset train = make(n_train, train_seed);
    const Dataset test = make(n_test, test_seed);
    save_dataset(ctx.output("train.txt"), train);
    save_dataset(ctx.output("test.txt"), test);

    *ctx.out << "wrote " << train.examples.size() << " train and " << test.examples.size()
             << " test examples to " << ctx.out_dir.string() << '\n';
    if (finger)
        *ctx.out << "occlusion rate: train " << occlusion_rate(train, 1) << ", test "
                 << occlusion_rate(test, 1) << '\n';
    return kExitOk;
}

// --- label ---------------------------------------------------------------------

int cmd_label(RunContext& ctx) {
    Resolver r = ctx.resolver();
    const fs::path dataset_path = ctx.input_file("label.dataset");
    const Dataset ds = load_dataset(dataset_path);
    if (ds.info.generator != "finger" || ds.info.joints != 2 || ds.info.dim != 2)
        throw ConfigError("label: dataset has no renderable finger scenes");

    const int tau = static_cast<int>(r.integer("label.tau_pix", kDefaultTauPix));
    if (tau < 1) throw ConfigError("label.tau_pix must be >= 1");
    RenderOptions ro;
    ro.size = static_cast<int>(positive(r.integer("label.size", ro.size), "label.size"));
    ro.capsule_radius = positive(r.real("label.capsule_radius", ro.capsule_radius), "label.capsule_radius");
    ro.sphere_radius = positive(r.real("label.sphere_radius", ro.sphere_radius), "label.sphere_radius");
    ro.finger_depth = positive(r.real("label.finger_depth", ro.finger_depth), "label.finger_depth");
    ro.occluder_depth = positive(r.real("label.occluder_depth", ro.occluder_depth), "label.occluder_depth");
    if (!(ro.occluder_depth < ro.finger_depth))
        throw ConfigError("label.occluder_depth must be in front of label.finger_depth");
    const double x_occ = r.real("label.x_occ", ds.info.x_occ);
    const double max_dist = r.real("label.max_surface_distance", -1.0);
    const long long export_images = r.integer("label.export_images", 0);

    ro.intrinsics.fx = positive(r.real("camera.fx"), "camera.fx");
    ro.intrinsics.fy = positive(r.real("camera.fy"), "camera.fy");
    ro.intrinsics.cx = r.real("camera.cx");
    ro.intrinsics.cy = r.real("camera.cy");
    if (r.str("camera.projection", std::string("orthographic")) != "orthographic")
        throw ConfigError("camera.projection: only orthographic is supported by the renderer");

    std::vector<std::string> outputs = {"labels.csv", "relabeled.txt"};
    for (long long i = 0; i < export_images; ++i) {
        outputs.push_back("render_" + std::to_string(i) + ".depth");
        outputs.push_back("render_" + std::to_string(i) + ".pgm");
    }
    ctx.claim_outputs(outputs);

    auto csv = open_output(ctx.output("labels.csv"));
    csv << "example,joint,pixels,visible,analytic_visible\n";
    Dataset relabeled = ds;
    std::size_t agree = 0, total = 0, tip_agree = 0, tip_total = 0;
    const OccluderBox occluder = OccluderBox::half_plane(x_occ);
    for (std::size_t n = 0; n < ds.examples.size(); ++n) {
        const auto& ex = ds.examples[n];
        const Eigen::Vector2d mid = ex.joints[0].labels.front();
        const Eigen::Vector2d tip = ex.joints[1].labels.front();
        const FingerScene scene = FingerScene::from_points(mid, tip);
        const FingerRender render = render_finger_depth(scene, occluder, ro);
        const PixelAssignment assignment = assign_pixels(render.image, render.spheres, max_dist);
        const auto visible = label_visibility(assignment.counts, tau);
        if (static_cast<long long>(n) < export_images) {
            save_depth(ctx.output("render_" + std::to_string(n) + ".depth"), render.image);
            export_pgm(ctx.output("render_" + std::to_string(n) + ".pgm"), render.image);
        }
        const Eigen::Vector2d truth_points[2] = {scene.mid(), scene.tip()};
        for (int d = 0; d < 2; ++d) {
            const bool analytic = truth_points[d].x() < x_occ;
            csv << n << ',' << d << ',' << assignment.counts[static_cast<std::size_t>(d)] << ','
                << (visible[static_cast<std::size_t>(d)] ? 1 : 0) << ',' << (analytic ? 1 : 0) << '\n';
            const bool match = visible[static_cast<std::size_t>(d)] == analytic;
            agree += match;
            ++total;
            if (d == 1) {
                tip_agree += match;
                ++tip_total;
            }
            auto& joint = relabeled.examples[n].joints[static_cast<std::size_t>(d)];
            joint.visible = visible[static_cast<std::size_t>(d)];
            if (joint.visible && joint.labels.size() > 1) joint.labels.resize(1);
        }
    }
    save_dataset(ctx.output("relabeled.txt"), relabeled);
    const double rate = total ? static_cast<double>(agree) / static_cast<double>(total) : 1.0;
    const double tip_rate = tip_total ? static_cast<double>(tip_agree) / static_cast<double>(tip_total) : 1.0;
    *ctx.out << "labeled " << ds.examples.size() << " scenes\n"
             << "agreement: all joints " << rate << ", tip " << tip_rate << '\n';
    return kExitOk;
}

// --- train ---------------------------------------------------------------------

int cmd_train(RunContext& ctx) {
    Resolver r = ctx.resolver();
    const fs::path dataset_path = ctx.input_file("train.dataset");
    TrainConfig config;
    config.mode = parse_model_mode(r.str("train.mode", to_string(config.mode)));
    ctx.resolved.set("train.mode", to_string(config.mode));
    config.epochs = static_cast<int>(positive(r.integer("train.epochs", config.epochs), "train.epochs"));
    config.batch_size =
        static_cast<int>(positive(r.integer("train.batch_size", config.batch_size), "train.batch_size"));
    config.lr = r.real("train.lr", config.lr);
    if (!(config.lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
    config.beta1 = r.real("train.beta1", config.beta1);
    config.beta2 = r.real("train.beta2", config.beta2);
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0))
        throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
    config.eps_adam = positive(r.real("train.eps_adam", config.eps_adam), "train.eps_adam");
    config.components =
        static_cast<int>(positive(r.integer("train.components", config.components), "train.components"));
    config.hidden = r.int_list("train.hidden", config.hidden);
    for (int h : config.hidden)
        if (h < 1) throw ConfigError("train.hidden widths must be positive");
    config.floors.s_floor = positive(r.real("train.s_floor", config.floors.s_floor), "train.s_floor");
    config.floors.eps_w = r.real("train.eps_w", config.floors.eps_w);
    if (!(config.floors.eps_w > 0.0 && config.floors.eps_w < 0.5))
        throw ConfigError("train.eps_w must lie in (0, 0.5)");
    config.sgn_multi_label = parse_multi_label_policy(
        r.str("train.sgn_multi_label", to_string(config.sgn_multi_label)));
    config.average_labels = r.flag("train.average_labels", config.average_labels);
    config.seed = Rng::split(ctx.seed, kTrainStream);

    const Dataset ds = load_dataset(dataset_path);
    try {
        check_trainable(ds, config);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("train: ") + e.what());
    }
    ctx.claim_outputs({"model.bin", "trace.csv"});

    const TrainResult result = train(ds, config);
    save_model(ctx.output("model.bin"), result.model);
    auto trace = open_output(ctx.output("trace.csv"));
    trace << "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_trace.size(); ++e) trace << e + 1 << ',' << result.loss_trace[e] << '\n';

    for (double v : result.loss_trace)
        if (!std::isfinite(v)) throw VerificationFailure("training loss became non-finite");
    *ctx.out << "trained " << to_string(config.mode) << " for " << config.epochs << " epochs; final loss "
             << result.loss_trace.back() << '\n';
    return kExitOk;
}

// --- eval ----------------------------------------------------------------------

int cmd_eval(RunContext& ctx) {
    Resolver r = ctx.resolver();
    const fs::path model_path = ctx.input_file("eval.model");
    const fs::path dataset_path = ctx.input_file("eval.dataset");
    ProtocolConfig protocol;
    protocol.repeats = static_cast<int>(positive(r.integer("eval.repeats", protocol.repeats), "eval.repeats"));
    protocol.ks = r.int_list("eval.ks", protocol.ks);
    if (protocol.ks.empty()) throw ConfigError("eval.ks must not be empty");
    for (int k : protocol.ks)
        if (k < 1) throw ConfigError("eval.ks entries must be >= 1");
    protocol.set_samples =
        static_cast<int>(positive(r.integer("eval.set_samples", protocol.set_samples), "eval.set_samples"));
    protocol.threshold_max = positive(r.real("eval.threshold_max", protocol.threshold_max), "eval.threshold_max");
    protocol.threshold_steps = static_cast<int>(
        positive(r.integer("eval.threshold_steps", protocol.threshold_steps), "eval.threshold_steps"));
    protocol.deterministic = r.flag("eval.deterministic", protocol.deterministic);
    protocol.seed = Rng::split(ctx.seed, kEvalStream);

    const MlpModel model = load_model(model_path);
    const Dataset ds = load_dataset(dataset_path);
    if (ds.info.feature_width != model.input_width() || ds.info.joints != model.head.joints ||
        ds.info.dim != model.head.dim)
        throw ConfigError("eval: dataset shape does not match the model");
    ctx.claim_outputs({"report.csv"});

    const MetricReport report = evaluate(model, ds, protocol);
    save_report_csv(ctx.output("report.csv"), report);
    try {
        check_report_invariants(report);
    } catch (const std::logic_error& e) {
        throw VerificationFailure(std::string("report invariant violated: ") + e.what());
    }
    auto show = [&](const char* name, const std::optional<MetricStat>& m) {
        *ctx.out << name << ": ";
        if (m)
            *ctx.out << m->mean << " (std " << m->std << ")\n";
        else
            *ctx.out << "NA\n";
    };
    show("vis_err", report.vis_err);
    show("occ_err", report.occ_err);
    show("set_min", report.set_min);
    *ctx.out << "nll: " << report.nll << '\n';
    return kExitOk;
}

// --- sample --------------------------------------------------------------------

int cmd_sample(RunContext& ctx) {
    Resolver r = ctx.resolver();
    const fs::path model_path = ctx.input_file("sample.model");
    const fs::path dataset_path = ctx.input_file("sample.dataset");
    const long long count = positive(r.integer("sample.count", 100), "sample.count");
    const long long examples = positive(r.integer("sample.examples", 10), "sample.examples");
    const std::string mode_text = r.str("sample.sample_mode", std::string("gated"));
    if (mode_text != "gated" && mode_text != "generative")
        throw ConfigError("sample.sample_mode must be gated or generative");
    const bool generative = mode_text == "generative";

    const MlpModel model = load_model(model_path);
    const Dataset ds = load_dataset(dataset_path);
    if (ds.info.feature_width != model.input_width())
        throw ConfigError("sample: dataset feature width does not match the model");
    if (generative && (model.mode == ModelMode::sgn || model.mode == ModelMode::mdn))
        throw ConfigError("sample: generative sampling needs an hmdn model");
    ctx.claim_outputs({"samples.csv"});

    auto csv = open_output(ctx.output("samples.csv"));
    csv << "example,joint,sample,branch";
    for (int k = 0; k < model.head.dim; ++k) csv << ",x" << k;
    csv << '\n';
    const std::uint64_t base = Rng::split(ctx.seed, kSampleStream);
    const std::size_t n_examples = std::min<std::size_t>(static_cast<std::size_t>(examples), ds.examples.size());
    for (std::size_t n = 0; n < n_examples; ++n) {
        Rng rng(Rng::split(base, n));
        const auto params = predict(model, ds.examples[n].input);
        for (std::size_t d = 0; d < params.size(); ++d) {
            const auto samples = generative
                                     ? sample_joint(params[d], static_cast<std::size_t>(count), rng,
                                                    SampleMode::generative)
                                     : sample_model_joint(params[d], model.mode,
                                                          static_cast<std::size_t>(count), rng);
            for (std::size_t s = 0; s < samples.size(); ++s) {
                csv << n << ',' << d << ',' << s << ',';
                if (samples[s].branch == kUnimodalBranch)
                    csv << "uni";
                else
                    csv << samples[s].branch;
                for (Eigen::Index k = 0; k < samples[s].point.size(); ++k) csv << ',' << samples[s].point[k];
                csv << '\n';
            }
        }
    }
    *ctx.out << "wrote " << n_examples * static_cast<std::size_t>(count) * static_cast<std::size_t>(model.head.joints)
             << " samples to " << ctx.output("samples.csv").string() << '\n';
    return kExitOk;
}

// --- gradcheck -----------------------------------------------------------------

int cmd_gradcheck(RunContext& ctx) {
    Resolver r = ctx.resolver();
    GradCheckOptions options;
    options.draws = static_cast<int>(positive(r.integer("gradcheck.draws", options.draws), "gradcheck.draws"));
    options.step = positive(r.real("gradcheck.step", options.step), "gradcheck.step");
    options.head_tolerance =
        positive(r.real("gradcheck.head_tolerance", options.head_tolerance), "gradcheck.head_tolerance");
    options.weight_tolerance =
        positive(r.real("gradcheck.weight_tolerance", options.weight_tolerance), "gradcheck.weight_tolerance");
    options.sabotage = r.flag("gradcheck.sabotage", false);
    const std::string modes = r.str("gradcheck.modes", std::string("sgn,mdn,hmdn-hard,hmdn-soft"));
    options.modes.clear();
    std::stringstream ss(modes);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            options.modes.push_back(parse_model_mode(item));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("gradcheck.modes: ") + e.what());
        }
    }
    if (options.modes.empty()) throw ConfigError("gradcheck.modes must not be empty");
    options.seed = Rng::split(ctx.seed, kGradcheckStream);
    ctx.claim_outputs({"gradcheck.csv"});

    const GradCheckReport report = run_gradcheck(options);
    auto csv = open_output(ctx.output("gradcheck.csv"));
    write_gradcheck_csv(csv, report);
    for (const auto& row : report.rows)
        *ctx.out << (row.pass ? "PASS " : "FAIL ") << row.suite << ' ' << to_string(row.mode)
                 << " max_rel_error=" << row.max_rel_error << " tolerance=" << row.tolerance << '\n';
    if (!report.pass()) throw VerificationFailure("gradient check failed");
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchical mixture density network toolkit", "hmdn"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool overwrite = false;
    std::vector<std::string> overrides;

    using Handler = std::function<int(RunContext&)>;
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"gen", "Generate train/test datasets", cmd_gen},
        {"label", "Render scenes and label joint visibility from depth", cmd_label},
        {"train", "Train a model", cmd_train},
        {"eval", "Evaluate a model on a dataset", cmd_eval},
        {"sample", "Draw test-time samples from a model", cmd_sample},
        {"gradcheck", "Compare analytic and numeric gradients", cmd_gradcheck},
    };
    for (const auto& [name, help, handler] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "INI config file");
        sub->add_option("--seed", seed, "Master seed (run.seed)");
        sub->add_option("--out", out_dir, "Output directory (run.out)");
        sub->add_flag("--overwrite", overwrite, "Replace existing outputs");
        sub->add_option("--set", overrides, "Override a config key: section.key=value");
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    RunContext ctx;
    ctx.out = &out;
    ctx.overwrite = overwrite;
    const Handler* handler = nullptr;
    for (const auto& [name, help, h] : commands)
        if (app.got_subcommand(name)) {
            ctx.command = name;
            handler = &h;
        }

    try {
        if (!config_path.empty()) ctx.input = Config::load(config_path);
        for (const auto& o : overrides) ctx.input.set_assignment(o);
        if (seed) ctx.input.set("run.seed", std::to_string(*seed));
        if (!out_dir.empty()) ctx.input.set("run.out", out_dir);
        ctx.input.reject_unknown(allowed_keys());

        Resolver r = ctx.resolver();
        ctx.seed = r.u64("run.seed", 0);
        ctx.out_dir = r.str("run.out", std::string("out"));
        return (*handler)(ctx);
    } catch (const VerificationFailure& e) {
        err << "hmdn " << ctx.command << ": verification failed: " << e.what() << '\n';
        return kExitVerification;
    } catch (const std::exception& e) {
        err << "hmdn " << ctx.command << ": error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace hmdn
