#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sourcesink/checks.hpp"
#include "sourcesink/io.hpp"
#include "sourcesink/pipeline.hpp"

namespace py = pybind11;
using namespace sourcesink;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Time-varying attractor/repeller inference from agent trajectories";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // kernel
    py::class_<KernelHyperparams>(m, "KernelHyperparams")
        .def(py::init([](double output_scale, Eigen::VectorXd length_scales, double noise_std) {
                 KernelHyperparams hp;
                 hp.output_scale = output_scale;
                 hp.length_scales = std::move(length_scales);
                 hp.noise_std = noise_std;
                 hp.validate();
                 return hp;
             }),
             py::arg("output_scale"), py::arg("length_scales"), py::arg("noise_std") = 0.0)
        .def_readwrite("output_scale", &KernelHyperparams::output_scale)
        .def_readwrite("length_scales", &KernelHyperparams::length_scales)
        .def_readwrite("noise_std", &KernelHyperparams::noise_std)
        .def("dim", &KernelHyperparams::dim);
    m.def("se_kernel", &se_kernel);
    m.def("se_kernel_grad", &se_kernel_grad);
    m.def("se_kernel_hess", &se_kernel_hess);
    m.def("se_kernel_cross", &se_kernel_cross);
    m.def("kernel_matrix", &kernel_matrix);

    // gp
    py::class_<GaussianScalar>(m, "GaussianScalar")
        .def(py::init<double, double>(), py::arg("mean") = 0.0, py::arg("variance") = 0.0)
        .def_readwrite("mean", &GaussianScalar::mean)
        .def_readwrite("variance", &GaussianScalar::variance)
        .def("__repr__", [](const GaussianScalar& g) {
            return "GaussianScalar(mean=" + std::to_string(g.mean) +
                   ", variance=" + std::to_string(g.variance) + ")";
        });
    py::class_<GpModel>(m, "GpModel")
        .def_property_readonly("inputs", &GpModel::inputs)
        .def_property_readonly("targets", &GpModel::targets)
        .def_property_readonly("hyperparams", &GpModel::hyperparams)
        .def("size", &GpModel::size)
        .def("empty", &GpModel::empty);
    m.def("fit", &fit);
    m.def("no_data_model", &no_data_model);
    m.def("predict", &predict);
    m.def("predict_derivative", &predict_derivative);
    m.def("predict_derivative_batch", &predict_derivative_batch);
    m.def("log_marginal_likelihood", &log_marginal_likelihood);
    m.def("lml_with_gradient", &lml_with_gradient);
    py::class_<OptimizeConfig>(m, "OptimizeConfig")
        .def(py::init<>())
        .def_readwrite("restarts", &OptimizeConfig::restarts)
        .def_readwrite("max_iters", &OptimizeConfig::max_iters)
        .def_readwrite("restart_sigma", &OptimizeConfig::restart_sigma)
        .def_readwrite("seed", &OptimizeConfig::seed)
        .def_readwrite("lower", &OptimizeConfig::lower)
        .def_readwrite("upper", &OptimizeConfig::upper);
    py::class_<OptimizeResult>(m, "OptimizeResult")
        .def_readonly("hp", &OptimizeResult::hp)
        .def_readonly("lml", &OptimizeResult::lml)
        .def_readonly("improved", &OptimizeResult::improved);
    m.def("optimize_hyperparameters", &optimize_hyperparameters, py::arg("inputs"),
          py::arg("targets"), py::arg("init"), py::arg("config") = OptimizeConfig{});

    // trajectory layer
    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init([](std::string agent_id, Eigen::VectorXd t, Eigen::VectorXd x,
                         Eigen::VectorXd y) {
                 Trajectory tr{std::move(agent_id), std::move(t), std::move(x), std::move(y)};
                 tr.validate();
                 return tr;
             }),
             py::arg("agent_id"), py::arg("t"), py::arg("x"), py::arg("y"))
        .def_readwrite("agent_id", &Trajectory::agent_id)
        .def_readwrite("t", &Trajectory::t)
        .def_readwrite("x", &Trajectory::x)
        .def_readwrite("y", &Trajectory::y)
        .def("size", &Trajectory::size);
    py::class_<TrajectoryModel>(m, "TrajectoryModel")
        .def_readonly("agent_id", &TrajectoryModel::agent_id)
        .def_readonly("gp_x", &TrajectoryModel::gp_x)
        .def_readonly("gp_y", &TrajectoryModel::gp_y)
        .def_readonly("x_mean", &TrajectoryModel::x_mean)
        .def_readonly("y_mean", &TrajectoryModel::y_mean);
    py::class_<AccelerationSample>(m, "AccelerationSample")
        .def(py::init<>())
        .def(py::init([](double t, double x, double y, double ax, double ay, double ax_var,
                         double ay_var) {
                 return AccelerationSample{t, x, y, GaussianScalar{ax, ax_var},
                                           GaussianScalar{ay, ay_var}};
             }),
             py::arg("t"), py::arg("x"), py::arg("y"), py::arg("ax"), py::arg("ay"),
             py::arg("ax_var") = 0.0, py::arg("ay_var") = 0.0)
        .def_readwrite("t", &AccelerationSample::t)
        .def_readwrite("x", &AccelerationSample::x)
        .def_readwrite("y", &AccelerationSample::y)
        .def_readwrite("ax", &AccelerationSample::ax)
        .def_readwrite("ay", &AccelerationSample::ay);
    m.def("fit_trajectory",
          py::overload_cast<const Trajectory&, const KernelHyperparams&, bool,
                            const OptimizeConfig&>(&fit_trajectory),
          py::arg("trajectory"), py::arg("init"), py::arg("optimize"),
          py::arg("config") = OptimizeConfig{});
    m.def("predict_position", &predict_position);
    m.def("infer_accelerations", &infer_accelerations);

    // field layer
    py::class_<FieldModel>(m, "FieldModel")
        .def(py::init<>())
        .def_readwrite("gp_vx", &FieldModel::gp_vx)
        .def_readwrite("gp_vy", &FieldModel::gp_vy);
    py::class_<DerivativeTuple>(m, "DerivativeTuple")
        .def_readonly("vx", &DerivativeTuple::vx)
        .def_readonly("vy", &DerivativeTuple::vy)
        .def_readonly("dvx_dx", &DerivativeTuple::dvx_dx)
        .def_readonly("dvy_dy", &DerivativeTuple::dvy_dy)
        .def_readonly("dvx_dy", &DerivativeTuple::dvx_dy)
        .def_readonly("dvy_dx", &DerivativeTuple::dvy_dx);
    py::class_<FieldFitResult>(m, "FieldFitResult")
        .def_readonly("model", &FieldFitResult::model)
        .def_readonly("deduplicated", &FieldFitResult::deduplicated);
    m.def("fit_field", &fit_field, py::arg("samples"), py::arg("init_x"), py::arg("init_y"),
          py::arg("optimize"), py::arg("config_x") = OptimizeConfig{},
          py::arg("config_y") = OptimizeConfig{});
    m.def("predict_vector", &predict_vector);
    m.def("predict_derivatives", &predict_derivatives);
    m.def("divergence", &divergence);
    m.def("curl_z", &curl_z);
    m.def("laplacian_posterior", &laplacian_posterior);
    m.def("prior_laplacian_variance", &prior_laplacian_variance);

    // influence
    m.def("kl_gaussian", &kl_gaussian);
    m.def("signed_kl", &signed_kl);
    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_readwrite("x_bounds", &GridSpec::x_bounds)
        .def_readwrite("y_bounds", &GridSpec::y_bounds)
        .def_readwrite("nx", &GridSpec::nx)
        .def_readwrite("ny", &GridSpec::ny)
        .def_readwrite("times", &GridSpec::times);
    py::class_<InfluenceGrid>(m, "InfluenceGrid")
        .def_readonly("x_bounds", &InfluenceGrid::x_bounds)
        .def_readonly("y_bounds", &InfluenceGrid::y_bounds)
        .def_readonly("nx", &InfluenceGrid::nx)
        .def_readonly("ny", &InfluenceGrid::ny)
        .def_readonly("times", &InfluenceGrid::times)
        .def_readonly("lap_mean", &InfluenceGrid::lap_mean)
        .def_readonly("lap_var", &InfluenceGrid::lap_var)
        .def_readonly("signed_kl", &InfluenceGrid::signed_kl)
        .def("frame_size", &InfluenceGrid::frame_size)
        .def("index", &InfluenceGrid::index);
    m.def("build_grid", &build_grid, py::arg("model"), py::arg("spec"), py::arg("workers") = 0);
    m.def("mean_over_time", &mean_over_time);

    // synthetic world
    py::class_<UtilityParams>(m, "UtilityParams")
        .def(py::init([](Eigen::Vector2d mu1, Eigen::Vector2d mu2, double a, double b) {
                 UtilityParams p{std::move(mu1), std::move(mu2), a, b};
                 p.validate();
                 return p;
             }),
             py::arg("mu1") = Eigen::Vector2d(-1.5, 0.0), py::arg("mu2") = Eigen::Vector2d(1.5, 0.0),
             py::arg("a") = 2.1, py::arg("b") = 2.1)
        .def_readwrite("mu1", &UtilityParams::mu1)
        .def_readwrite("mu2", &UtilityParams::mu2)
        .def_readwrite("a", &UtilityParams::a)
        .def_readwrite("b", &UtilityParams::b);
    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("eta", &SimConfig::eta)
        .def_readwrite("noise_std", &SimConfig::noise_std)
        .def_readwrite("steps", &SimConfig::steps)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("initial_positions", &SimConfig::initial_positions);
    m.def("utility", &utility);
    m.def("utility_grad", &utility_grad);
    m.def("utility_laplacian", &utility_laplacian);
    m.def("simulate", &simulate);
    m.def("simulate_with_gradient", &simulate_with_gradient);
    m.def("dominant_attractor", &dominant_attractor);

    // io + pipeline
    py::class_<Normalization>(m, "Normalization")
        .def(py::init<>())
        .def_readwrite("x_offset", &Normalization::x_offset)
        .def_readwrite("y_offset", &Normalization::y_offset)
        .def_readwrite("scale", &Normalization::scale);
    m.def("load_trajectories", &load_trajectories);
    m.def("save_trajectories", &save_trajectories);
    m.def("normalize", &normalize);
    m.def("denormalize", &denormalize);
    m.def("export_grid", &export_grid);
    m.def("load_grid", &load_grid);
    m.def("export_mean_map", &export_mean_map);
    m.def("render_heatmap", &render_heatmap, py::arg("map"), py::arg("path"),
          py::arg("scale") = 1);
    m.def("save_field_model", &save_field_model);
    m.def("load_field_model", [](const std::string& path) {
        LoadedFieldModel lm = load_field_model(path);
        return py::make_tuple(lm.model, lm.norm);
    });

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("input_path", &PipelineConfig::input_path)
        .def_readwrite("utility", &PipelineConfig::utility)
        .def_readwrite("sim", &PipelineConfig::sim)
        .def_readwrite("optimize_trajectory", &PipelineConfig::optimize_trajectory)
        .def_readwrite("optimize_field", &PipelineConfig::optimize_field)
        .def_readwrite("trajectory_restarts", &PipelineConfig::trajectory_restarts)
        .def_readwrite("field_restarts", &PipelineConfig::field_restarts)
        .def_readwrite("optimizer_seed", &PipelineConfig::optimizer_seed)
        .def_readwrite("trim", &PipelineConfig::trim)
        .def_readwrite("grid", &PipelineConfig::grid)
        .def_readwrite("workers", &PipelineConfig::workers)
        .def_readwrite("out_dir", &PipelineConfig::out_dir)
        .def_readwrite("image_scale", &PipelineConfig::image_scale)
        .def_readwrite("frame_images", &PipelineConfig::frame_images);
    py::class_<PipelineResult>(m, "PipelineResult")
        .def_readonly("trajectories", &PipelineResult::trajectories)
        .def_readonly("norm", &PipelineResult::norm)
        .def_readonly("agents", &PipelineResult::agents)
        .def_readonly("field", &PipelineResult::field)
        .def_readonly("deduplicated", &PipelineResult::deduplicated)
        .def_readonly("grid", &PipelineResult::grid)
        .def_readonly("mean_map", &PipelineResult::mean_map)
        .def_readonly("seconds_total", &PipelineResult::seconds_total);
    m.def("run_pipeline", &run_pipeline, py::call_guard<py::gil_scoped_release>());

    // oracle suites
    py::class_<CheckResult>(m, "CheckResult")
        .def_readonly("name", &CheckResult::name)
        .def_readonly("pass_", &CheckResult::pass)
        .def_readonly("worst", &CheckResult::worst)
        .def_readonly("detail", &CheckResult::detail);
    m.def("run_all_checks", &run_all_checks, py::call_guard<py::gil_scoped_release>());
}
