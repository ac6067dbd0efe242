#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bpa/align.hpp"
#include "bpa/bench.hpp"
#include "bpa/corr_io.hpp"
#include "bpa/errors.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("BPA_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw bpa::InvalidInputError("BPA_SEED is not an unsigned integer");
    }
  }
  return 0;
}

void print_quat(const char* name, const bpa::UnitQuaternion& q) {
  std::printf("%s = %.12g %.12g %.12g %.12g\n", name, q.w, q.x, q.y, q.z);
}

void print_posterior(const bpa::PosePosterior& post) {
  const auto& B = post.q_given_t;
  std::printf("lambda = %.12g %.12g %.12g\n", B.lambdas()(0), B.lambdas()(1), B.lambdas()(2));
  for (int j = 0; j < 3; ++j) {
    std::printf("v%d = %.12g %.12g %.12g %.12g\n", j + 1, B.dirs()(0, j), B.dirs()(1, j),
                B.dirs()(2, j), B.dirs()(3, j));
  }
  print_quat("mode", bpa::bingham_mode(B));
  std::printf("log_normalizer = %.12g\n", B.log_normalizer());
  std::printf("mode_unique = %s\n", B.mode_is_unique() ? "true" : "false");
}

int run(int argc, char** argv) {
  CLI::App app{"Bingham-based probabilistic rigid alignment"};
  app.require_subcommand(1);

  // align
  std::string align_file;
  auto* align_cmd = app.add_subcommand("align", "MAP pose and orientation posterior "
                                                "for a correspondence file");
  align_cmd->add_option("file", align_file, "correspondence file")->required();

  // sample
  std::string sample_file;
  int sample_count = 100;
  std::uint64_t sample_seed = default_seed();
  std::optional<double> sample_tau;
  auto* sample_cmd = app.add_subcommand("sample", "weighted pose samples from the posterior");
  sample_cmd->add_option("file", sample_file, "correspondence file")->required();
  sample_cmd->add_option("--count", sample_count, "number of samples");
  sample_cmd->add_option("--seed", sample_seed, "rng seed (default: BPA_SEED or 0)");
  sample_cmd->add_option("--proposal-std", sample_tau,
                         "translation proposal std-dev in meters (default: mean sigma / sqrt(n))");

  // benchmark
  bpa::TrialConfig tcfg;
  tcfg.seed = default_seed();
  std::string bench_shape = "composite";
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("benchmark", "synthetic BPA-vs-ICP error curves");
  bench_cmd->add_option("--trials", tcfg.n_trials, "number of trials");
  bench_cmd->add_option("--iterations", tcfg.iterations, "alignment iterations per trial");
  bench_cmd->add_option("--seed", tcfg.seed, "root seed (default: BPA_SEED or 0)");
  bench_cmd->add_option("--points", tcfg.n_points, "points per synthetic cloud");
  bench_cmd->add_option("--shape", bench_shape, "box|cylinder|sphere-cap|composite");
  bench_cmd->add_option("--position-noise", tcfg.position_noise_std,
                        "scene position noise std (m)");
  bench_cmd->add_option("--perturb-trans", tcfg.perturb_trans_std,
                        "initial-pose translation perturbation std (m)");
  bench_cmd->add_option("--perturb-rot", tcfg.perturb_rot_std,
                        "initial-pose rotation perturbation std (rad)");
  bench_cmd->add_option("--kappa", tcfg.frame_noise_kappa, "frame noise concentration (<= 0)");
  bench_cmd->add_option("--samples", tcfg.samples_per_step, "pose samples per BPA step");
  bench_cmd->add_option("--correspondences", tcfg.correspondences_per_step,
                        "correspondences per step");
  bench_cmd->add_option("--out", bench_out, "write CSV here instead of stdout");

  // normalizer
  std::vector<double> lambdas;
  auto* norm_cmd = app.add_subcommand("normalizer", "Bingham normalization constant F "
                                                    "(pass negative values after --)");
  norm_cmd->add_option("lambdas", lambdas, "three concentrations <= 0")->expected(3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (align_cmd->parsed()) {
    const auto corrs = bpa::load_correspondence_file(align_file);
    const bpa::RigidPose pose = bpa::map_pose(corrs);
    const auto post = bpa::fuse_orientation_measurements(
        corrs, bpa::posterior_orientation(corrs, pose.t));
    print_quat("q", pose.q);
    std::printf("t = %.12g %.12g %.12g\n", pose.t.x(), pose.t.y(), pose.t.z());
    std::printf("t_star = %.12g %.12g %.12g\n", post.t_star.x(), post.t_star.y(),
                post.t_star.z());
    print_posterior(post);
    return 0;
  }

  if (sample_cmd->parsed()) {
    const auto corrs = bpa::load_correspondence_file(sample_file);
    bpa::AlignConfig cfg;
    cfg.samples_per_step = sample_count;
    cfg.translation_proposal_std = sample_tau;
    cfg.seed = sample_seed;
    std::mt19937_64 rng(sample_seed);
    const auto samples = bpa::bpa_sample(corrs, cfg, rng);
    std::printf("# qw qx qy qz tx ty tz log_weight\n");
    for (const auto& s : samples) {
      std::printf("%.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g\n", s.q.w, s.q.x, s.q.y,
                  s.q.z, s.t.x(), s.t.y(), s.t.z(), s.log_weight);
    }
    return 0;
  }

  if (bench_cmd->parsed()) {
    tcfg.shape = bpa::shape_from_string(bench_shape);
    const auto result = bpa::run_benchmark(tcfg);
    const std::string csv = bpa::curves_to_csv(result.curves);
    if (bench_out.empty()) {
      std::fputs(csv.c_str(), stdout);
    } else {
      std::ofstream f(bench_out);
      if (!f) throw bpa::InvalidInputError("cannot open output file: " + bench_out);
      f << csv;
    }
    return 0;
  }

  // normalizer
  std::printf("%.10g\n", bpa::bingham_normalizer(Eigen::Vector3d(lambdas[0], lambdas[1],
                                                                 lambdas[2])));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bpa::InvalidInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const bpa::DegenerateError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
