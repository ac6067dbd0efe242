#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bpa/align.hpp"
#include "bpa/bench.hpp"
#include "bpa/corr_io.hpp"
#include "bpa/features.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

// Quaternions cross the boundary as scalar-first (w, x, y, z) arrays.
bpa::UnitQuaternion to_quat(const Eigen::Vector4d& q) {
  return bpa::UnitQuaternion::from_components(q(0), q(1), q(2), q(3));
}

Eigen::Vector4d from_quat(const bpa::UnitQuaternion& q) { return q.coeffs(); }

Eigen::MatrixX4d stack_quats(const std::vector<bpa::UnitQuaternion>& qs) {
  Eigen::MatrixX4d out(qs.size(), 4);
  for (std::size_t i = 0; i < qs.size(); ++i) out.row(i) = qs[i].coeffs();
  return out;
}

bpa::RigidPose to_pose(const Eigen::Vector4d& q, const bpa::Vec3& t) { return {to_quat(q), t}; }

py::list trace_to_list(const std::vector<bpa::TraceEntry>& trace) {
  py::list out;
  for (const auto& e : trace) {
    out.append(py::dict("q"_a = from_quat(e.pose.q), "t"_a = e.pose.t,
                        "probe_sse"_a = e.probe_sse, "score"_a = e.score,
                        "accepted"_a = e.accepted));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_bpa_core, m) {
  m.doc() = "Bingham-based probabilistic rigid alignment";

  // quaternion algebra
  m.def("quat_multiply", [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    return from_quat(bpa::quat_multiply(to_quat(a), to_quat(b)));
  });
  m.def("quat_to_rotation",
        [](const Eigen::Vector4d& q) { return bpa::quat_to_rotation(to_quat(q)); });
  m.def("rotation_to_quat",
        [](const bpa::RotationMatrix& R) { return from_quat(bpa::rotation_to_quat(R)); });
  m.def("rotate_vector", [](const Eigen::Vector4d& q, const bpa::Vec3& v) {
    return bpa::rotate_vector(to_quat(q), v);
  });
  m.def("quat_between_axes", [](const bpa::Vec3& u, const bpa::Vec3& v) {
    return from_quat(bpa::quat_between_axes(u, v));
  });
  m.def("angular_distance", [](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    return bpa::angular_distance(to_quat(a), to_quat(b));
  });

  // Bingham distribution
  py::class_<bpa::BinghamDist>(m, "BinghamDist")
      .def_static("make", &bpa::BinghamDist::make, "lambdas"_a, "dirs"_a)
      .def_static("uniform", &bpa::BinghamDist::uniform)
      .def_property_readonly("lambdas",
                             [](const bpa::BinghamDist& b) { return b.lambdas(); })
      .def_property_readonly(
          "dirs", [](const bpa::BinghamDist& b) -> Eigen::MatrixXd { return b.dirs(); })
      .def_property_readonly("log_normalizer", &bpa::BinghamDist::log_normalizer)
      .def("pdf", [](const bpa::BinghamDist& b,
                     const Eigen::Vector4d& q) { return bpa::bingham_pdf(b, to_quat(q)); })
      .def("log_pdf",
           [](const bpa::BinghamDist& b, const Eigen::Vector4d& q) {
             return bpa::bingham_log_pdf(b, to_quat(q));
           })
      .def("mode", [](const bpa::BinghamDist& b) { return from_quat(bpa::bingham_mode(b)); })
      .def("mode_is_unique", &bpa::BinghamDist::mode_is_unique, "tol"_a = 1e-9)
      .def("sample", [](const bpa::BinghamDist& b, std::size_t n, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return stack_quats(bpa::bingham_sample(b, rng, n));
      }, "n"_a, "seed"_a = 0);

  m.def("bingham_normalizer", &bpa::bingham_normalizer, "lambdas"_a);
  m.def("bingham_log_normalizer", &bpa::bingham_log_normalizer, "lambdas"_a);
  m.def("bingham_multiply", [](const bpa::BinghamDist& a, const bpa::BinghamDist& b) {
    auto prod = bpa::bingham_multiply(a, b);
    return py::make_tuple(prod.dist, prod.mode_degenerate);
  });

  // correspondences and posteriors
  py::class_<bpa::Correspondence>(m, "Correspondence")
      .def(py::init([](const bpa::Vec3& model, const bpa::Vec3& scene, double sigma,
                       std::optional<py::tuple> orientation) {
             bpa::Correspondence c;
             c.model_point = model;
             c.scene_point = scene;
             c.sigma = sigma;
             if (orientation) {
               if (orientation->size() != 3) {
                 throw std::invalid_argument("orientation needs (q_model, q_scene, noise)");
               }
               bpa::OrientationMeasurement om;
               om.model_frame = to_quat((*orientation)[0].cast<Eigen::Vector4d>());
               om.scene_frame = to_quat((*orientation)[1].cast<Eigen::Vector4d>());
               om.noise = (*orientation)[2].cast<bpa::BinghamDist>();
               c.orientation = std::move(om);
             }
             return c;
           }),
           "model_point"_a, "scene_point"_a, "sigma"_a, "orientation"_a = std::nullopt)
      .def_readonly("model_point", &bpa::Correspondence::model_point)
      .def_readonly("scene_point", &bpa::Correspondence::scene_point)
      .def_readonly("sigma", &bpa::Correspondence::sigma)
      .def_property_readonly("has_orientation", [](const bpa::Correspondence& c) {
        return c.orientation.has_value();
      });

  py::class_<bpa::PosePosterior>(m, "PosePosterior")
      .def_readonly("t_star", &bpa::PosePosterior::t_star)
      .def_readonly("q_given_t", &bpa::PosePosterior::q_given_t)
      .def_readonly("mode_degenerate", &bpa::PosePosterior::mode_degenerate);

  m.def("horn_align", [](const std::vector<bpa::Correspondence>& corrs) {
    const bpa::RigidPose p = bpa::horn_align(corrs);
    return py::make_tuple(from_quat(p.q), p.t);
  });
  m.def("correspondence_bingham", &bpa::correspondence_bingham, "corr"_a, "t"_a);
  m.def("posterior_orientation",
        [](const std::vector<bpa::Correspondence>& corrs, const bpa::Vec3& t,
           std::optional<bpa::BinghamDist> prior) {
          return bpa::posterior_orientation(corrs, t, prior ? &*prior : nullptr);
        },
        "corrs"_a, "t"_a, "prior"_a = std::nullopt);
  m.def("fuse_orientation_measurements",
        [](const std::vector<bpa::Correspondence>& corrs, const bpa::PosePosterior& base) {
          return bpa::fuse_orientation_measurements(corrs, base);
        });
  m.def("map_pose", [](const std::vector<bpa::Correspondence>& corrs) {
    const bpa::RigidPose p = bpa::map_pose(corrs);
    return py::make_tuple(from_quat(p.q), p.t);
  });
  m.def("least_squares_translation", [](const std::vector<bpa::Correspondence>& corrs) {
    return bpa::least_squares_translation(corrs);
  });
  m.def("measurement_log_likelihood",
        [](const std::vector<bpa::Correspondence>& corrs, const Eigen::Vector4d& q,
           const bpa::Vec3& t) { return bpa::measurement_log_likelihood(corrs, to_quat(q), t); });

  // alignment
  py::class_<bpa::AlignConfig>(m, "AlignConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &bpa::AlignConfig::iterations)
      .def_readwrite("samples_per_step", &bpa::AlignConfig::samples_per_step)
      .def_readwrite("translation_proposal_std", &bpa::AlignConfig::translation_proposal_std)
      .def_readwrite("seed", &bpa::AlignConfig::seed)
      .def_readwrite("accept_mode", &bpa::AlignConfig::accept_mode)
      .def_readwrite("proposal_choice", &bpa::AlignConfig::proposal_choice)
      .def_readwrite("correspondences_per_step", &bpa::AlignConfig::correspondences_per_step)
      .def_readwrite("correspondence_sigma", &bpa::AlignConfig::correspondence_sigma)
      .def_readwrite("probe_size", &bpa::AlignConfig::probe_size);

  py::enum_<bpa::AcceptMode>(m, "AcceptMode")
      .value("IF_IMPROVED", bpa::AcceptMode::kIfImproved)
      .value("ALWAYS", bpa::AcceptMode::kAlways);
  py::enum_<bpa::ProposalChoice>(m, "ProposalChoice")
      .value("BEST_WEIGHT", bpa::ProposalChoice::kBestWeight)
      .value("DRAW_BY_WEIGHT", bpa::ProposalChoice::kDrawByWeight);

  py::class_<bpa::OrientedCloud>(m, "OrientedCloud")
      .def(py::init([](const Eigen::MatrixX3d& points,
                       std::optional<std::vector<std::optional<py::tuple>>> frames,
                       std::optional<std::vector<bool>> edge_mask) {
             bpa::OrientedCloud cloud;
             for (Eigen::Index i = 0; i < points.rows(); ++i) {
               cloud.points.emplace_back(points.row(i).transpose());
             }
             if (frames) {
               for (const auto& f : *frames) {
                 if (!f) {
                   cloud.frames.emplace_back(std::nullopt);
                   continue;
                 }
                 bpa::PointFrame pf;
                 pf.q = to_quat((*f)[0].cast<Eigen::Vector4d>());
                 pf.noise = (*f)[1].cast<bpa::BinghamDist>();
                 cloud.frames.emplace_back(std::move(pf));
               }
             }
             if (edge_mask) cloud.edge_mask = *edge_mask;
             cloud.validate();
             return cloud;
           }),
           "points"_a, "frames"_a = std::nullopt, "edge_mask"_a = std::nullopt)
      .def_property_readonly("size",
                             [](const bpa::OrientedCloud& c) { return c.points.size(); });

  m.def("bpa_sample",
        [](const std::vector<bpa::Correspondence>& corrs, int n, std::uint64_t seed,
           std::optional<double> proposal_std) {
          bpa::AlignConfig cfg;
          cfg.samples_per_step = n;
          cfg.translation_proposal_std = proposal_std;
          std::mt19937_64 rng(seed);
          const auto samples = bpa::bpa_sample(corrs, cfg, rng);
          Eigen::MatrixX4d Q(samples.size(), 4);
          Eigen::MatrixX3d T(samples.size(), 3);
          Eigen::VectorXd W(samples.size());
          for (std::size_t i = 0; i < samples.size(); ++i) {
            Q.row(i) = samples[i].q.coeffs();
            T.row(i) = samples[i].t.transpose();
            W(i) = samples[i].log_weight;
          }
          return py::make_tuple(Q, T, W);
        },
        "corrs"_a, "n"_a = 100, "seed"_a = 0, "proposal_std"_a = std::nullopt);

  m.def("find_correspondences",
        [](const bpa::OrientedCloud& model, const bpa::OrientedCloud& scene,
           const Eigen::Vector4d& q, const bpa::Vec3& t, int k, double sigma,
           std::uint64_t seed) {
          std::mt19937_64 rng(seed);
          return bpa::find_correspondences(model, scene, to_pose(q, t), k, sigma, rng);
        },
        "model"_a, "scene"_a, "q"_a, "t"_a, "k"_a, "sigma"_a, "seed"_a = 0);

  m.def("icp_align",
        [](const bpa::OrientedCloud& model, const bpa::OrientedCloud& scene,
           const Eigen::Vector4d& q, const bpa::Vec3& t, const bpa::AlignConfig& cfg) {
          return trace_to_list(bpa::icp_align(model, scene, to_pose(q, t), cfg));
        },
        "model"_a, "scene"_a, "init_q"_a, "init_t"_a, "config"_a);
  m.def("bpa_iterative_align",
        [](const bpa::OrientedCloud& model, const bpa::OrientedCloud& scene,
           const Eigen::Vector4d& q, const bpa::Vec3& t, const bpa::AlignConfig& cfg) {
          return trace_to_list(bpa::bpa_iterative_align(model, scene, to_pose(q, t), cfg));
        },
        "model"_a, "scene"_a, "init_q"_a, "init_t"_a, "config"_a);

  // surface-feature uncertainty
  py::class_<bpa::SurfaceFrame>(m, "SurfaceFrame")
      .def(py::init([](const bpa::Vec3& normal, const bpa::Vec3& principal_dir, double c1,
                       double c2) {
             bpa::SurfaceFrame f{normal, principal_dir, c1, c2};
             f.validate();
             return f;
           }),
           "normal"_a, "principal_dir"_a, "c1"_a, "c2"_a)
      .def_readonly("normal", &bpa::SurfaceFrame::normal)
      .def_readonly("principal_dir", &bpa::SurfaceFrame::principal_dir)
      .def_readonly("c1", &bpa::SurfaceFrame::c1)
      .def_readonly("c2", &bpa::SurfaceFrame::c2);

  m.def("orientation_from_frame",
        [](const bpa::SurfaceFrame& f) { return from_quat(bpa::orientation_from_frame(f)); });
  m.def("flip_principal_curvature", [](const Eigen::Vector4d& q) {
    return from_quat(bpa::flip_principal_curvature(to_quat(q)));
  });
  m.def("feature_orientation_bingham", &bpa::feature_orientation_bingham, "frame"_a,
        "kappa"_a = -100.0);
  m.def("feature_noise_bingham", &bpa::feature_noise_bingham, "frame"_a, "kappa"_a = -100.0);

  // benchmark
  py::enum_<bpa::Shape>(m, "Shape")
      .value("BOX", bpa::Shape::kBox)
      .value("CYLINDER", bpa::Shape::kCylinder)
      .value("SPHERE_CAP", bpa::Shape::kSphereCap)
      .value("COMPOSITE", bpa::Shape::kComposite);

  py::class_<bpa::TrialConfig>(m, "TrialConfig")
      .def(py::init<>())
      .def_readwrite("n_trials", &bpa::TrialConfig::n_trials)
      .def_readwrite("n_points", &bpa::TrialConfig::n_points)
      .def_readwrite("shape", &bpa::TrialConfig::shape)
      .def_readwrite("position_noise_std", &bpa::TrialConfig::position_noise_std)
      .def_readwrite("perturb_trans_std", &bpa::TrialConfig::perturb_trans_std)
      .def_readwrite("perturb_rot_std", &bpa::TrialConfig::perturb_rot_std)
      .def_readwrite("frame_noise_kappa", &bpa::TrialConfig::frame_noise_kappa)
      .def_readwrite("iterations", &bpa::TrialConfig::iterations)
      .def_readwrite("samples_per_step", &bpa::TrialConfig::samples_per_step)
      .def_readwrite("correspondences_per_step", &bpa::TrialConfig::correspondences_per_step)
      .def_readwrite("seed", &bpa::TrialConfig::seed);

  m.def("generate_cloud", [](const bpa::TrialConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return bpa::generate_cloud(cfg, rng);
  }, "config"_a, "seed"_a = 0);
  m.def("perturb_pose",
        [](const Eigen::Vector4d& q, const bpa::Vec3& t, const bpa::TrialConfig& cfg,
           std::uint64_t seed) {
          std::mt19937_64 rng(seed);
          const bpa::RigidPose p = bpa::perturb_pose(to_pose(q, t), cfg, rng);
          return py::make_tuple(from_quat(p.q), p.t);
        },
        "q"_a, "t"_a, "config"_a, "seed"_a = 0);
  m.def("run_benchmark", [](const bpa::TrialConfig& cfg) {
    const bpa::BenchmarkResult r = bpa::run_benchmark(cfg);
    return py::dict("bpa_pos"_a = r.curves.bpa_position, "icp_pos"_a = r.curves.icp_position,
                    "bpa_rot"_a = r.curves.bpa_orientation,
                    "icp_rot"_a = r.curves.icp_orientation,
                    "excluded_trials"_a = r.curves.excluded_trials);
  });
  m.def("curves_csv", [](const bpa::TrialConfig& cfg) {
    return bpa::curves_to_csv(bpa::run_benchmark(cfg).curves);
  });

  m.def("load_correspondence_file", &bpa::load_correspondence_file, "path"_a);

  m.attr("__version__") = "0.1.0";
}
