#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <tuple>
#include <vector>

#include "pseudoseg/affinity.hpp"
#include "pseudoseg/maskfilter.hpp"
#include "pseudoseg/multicut.hpp"
#include "pseudoseg/ndio.hpp"
#include "pseudoseg/overlay.hpp"
#include "pseudoseg/selftrain.hpp"
#include "pseudoseg/sgmloss.hpp"
#include "pseudoseg/superpixel.hpp"

namespace py = pybind11;
using namespace pseudoseg;

namespace {

template <class T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

void require_ndim(const py::buffer_info& info, py::ssize_t ndim, const char* what) {
  if (info.ndim != ndim) {
    throw py::value_error(std::string(what) + ": expected " + std::to_string(ndim) +
                          "-d array, got " + std::to_string(info.ndim) + "-d");
  }
}

template <class T, class A>
Grid<T> grid_from(const A& arr, const char* what) {
  const auto info = arr.request();
  require_ndim(info, 2, what);
  const auto* p = static_cast<const typename A::value_type*>(info.ptr);
  return Grid<T>(static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]),
                 std::vector<T>(p, p + info.size));
}

template <class T>
py::array_t<T> to_numpy(const Grid<T>& g) {
  py::array_t<T> out({g.rows(), g.cols()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

Mask mask_from(const CArray<std::uint8_t>& a) { return grid_from<std::uint8_t>(a, "mask"); }

std::vector<Mask> masks_from(const CArray<std::uint8_t>& a) {
  const auto info = a.request();
  if (info.ndim == 2) return {mask_from(a)};
  require_ndim(info, 3, "mask stack");
  const auto rows = static_cast<int>(info.shape[1]), cols = static_cast<int>(info.shape[2]);
  const auto* p = a.data();
  std::vector<Mask> out;
  for (py::ssize_t m = 0; m < info.shape[0]; ++m) {
    out.emplace_back(rows, cols, std::vector<std::uint8_t>(p + m * rows * cols, p + (m + 1) * rows * cols));
  }
  return out;
}

py::array_t<std::uint8_t> masks_to_numpy(const std::vector<Mask>& masks, int rows, int cols) {
  py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(masks.size()), py::ssize_t(rows), py::ssize_t(cols)});
  auto* dst = out.mutable_data();
  for (const auto& m : masks) dst = std::copy(m.values().begin(), m.values().end(), dst);
  return out;
}

PatchGrid patches_from(const CArray<float>& f) {
  const auto info = f.request();
  require_ndim(info, 3, "features");
  if (info.shape[0] != info.shape[1]) throw py::value_error("features must be [N,N,E]");
  return PatchGrid(static_cast<int>(info.shape[0]), static_cast<int>(info.shape[2]),
                   std::vector<float>(f.data(), f.data() + info.size));
}

RgbImage image_from(const CArray<std::uint8_t>& img) {
  const auto info = img.request();
  require_ndim(info, 3, "image");
  if (info.shape[2] != 3) throw py::value_error("image must be [H,W,3]");
  return RgbImage{static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]),
                  std::vector<std::uint8_t>(img.data(), img.data() + info.size)};
}

py::array_t<std::uint8_t> image_to_numpy(const RgbImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, 3});
  std::copy(img.rgb.begin(), img.rgb.end(), out.mutable_data());
  return out;
}

SignedGraph graph_from(int node_count, const std::vector<std::tuple<int, int, double>>& edges) {
  SignedGraph g{node_count, {}};
  for (const auto& [u, v, c] : edges) g.edges.push_back({u, v, c});
  return g;
}

py::dict seg_to_dict(const SuperpixelSeg& seg) {
  py::dict d;
  d["labels"] = to_numpy(seg.labels);
  d["K"] = seg.k;
  d["sizes"] = seg.sizes;
  std::vector<std::tuple<double, double, double>> colors;
  for (const auto& c : seg.mean_color) colors.emplace_back(c.l, c.a, c.b);
  d["mean_color"] = colors;
  std::vector<std::tuple<int, int, double>> edges;
  for (const auto& e : seg.edges) edges.emplace_back(e.m, e.n, e.w);
  d["edges"] = edges;
  return d;
}

py::object array_to_numpy(const ArrayFile& a) {
  std::vector<py::ssize_t> shape(a.shape().begin(), a.shape().end());
  return std::visit(
      [&](const auto& v) -> py::object {
        using T = typename std::decay_t<decltype(v)>::value_type;
        py::array_t<T> out(shape);
        std::copy(v.begin(), v.end(), out.mutable_data());
        return out;
      },
      a.storage());
}

ArrayFile array_from_numpy(const py::array& arr) {
  std::vector<std::size_t> shape(arr.shape(), arr.shape() + arr.ndim());
  auto take = [&](auto tag) {
    using T = decltype(tag);
    auto c = CArray<T>::ensure(arr);
    return ArrayFile::from<T>(shape, std::vector<T>(c.data(), c.data() + c.size()));
  };
  const auto dt = arr.dtype();
  if (dt.is(py::dtype::of<float>())) return take(float{});
  if (dt.is(py::dtype::of<std::uint8_t>())) return take(std::uint8_t{});
  if (dt.is(py::dtype::of<std::int32_t>())) return take(std::int32_t{});
  throw Error(ErrorCode::UnsupportedDtype, "only float32, uint8 and int32 arrays are supported");
}

}  // namespace

PYBIND11_MODULE(_pseudoseg, m) {
  m.doc() = "Pseudo-label generation, filtering and training losses for unsupervised instance segmentation.";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<HyperParams>(m, "HyperParams")
      .def(py::init<>())
      .def_readwrite("q_percent", &HyperParams::q_percent)
      .def_readwrite("alpha1", &HyperParams::alpha1)
      .def_readwrite("alpha2", &HyperParams::alpha2)
      .def_readwrite("e_checkpoints", &HyperParams::e_checkpoints)
      .def_readwrite("epsilon", &HyperParams::epsilon)
      .def_readwrite("d_hat", &HyperParams::d_hat)
      .def_readwrite("tau_cut", &HyperParams::tau_cut)
      .def("validate", &HyperParams::validate);

  // ndio
  m.def("read_array", [](const std::string& path) { return array_to_numpy(read_array(path)); });
  m.def("write_array", [](const py::array& a, const std::string& path) {
    write_array(array_from_numpy(a), path);
  });
  m.def("read_image_ppm", [](const std::string& path) { return array_to_numpy(read_image_ppm(path)); });

  // affinity
  m.def("cosine", [](const CArray<float>& u, const CArray<float>& v) {
    return cosine(std::span<const float>(u.data(), u.size()), std::span<const float>(v.data(), v.size()));
  });
  m.def("affinity_map", [](const CArray<float>& f) { return to_numpy(build_affinity_map(patches_from(f))); });
  m.def("multicut_graph", [](const CArray<float>& f, double tau_cut) {
    std::vector<std::tuple<int, int, double>> edges;
    for (const auto& e : build_multicut_graph(patches_from(f), tau_cut).edges) edges.emplace_back(e.u, e.v, e.cost);
    return edges;
  }, py::arg("features"), py::arg("tau_cut") = 0.5);

  // multicut
  m.def("solve_multicut", [](int node_count, const std::vector<std::tuple<int, int, double>>& edges) {
    return solve_multicut(graph_from(node_count, edges)).labels;
  });
  m.def("multicut_objective", [](int node_count, const std::vector<std::tuple<int, int, double>>& edges,
                                 const std::vector<int>& labels) {
    return multicut_objective(graph_from(node_count, edges), make_partition(labels));
  });
  m.def("coarse_masks", [](const CArray<float>& f, double tau_cut) {
    const auto grid = patches_from(f);
    const auto masks = partition_to_masks(solve_multicut(build_multicut_graph(grid, tau_cut)), grid.n());
    std::vector<bool> fg;
    for (const auto& mk : masks) fg.push_back(is_foreground(mk));
    return py::make_tuple(masks_to_numpy(masks, grid.n(), grid.n()), fg);
  }, py::arg("features"), py::arg("tau_cut") = 0.5);
  m.def("is_foreground", [](const CArray<std::uint8_t>& mk) { return is_foreground(mask_from(mk)); });

  // maskfilter
  m.def("split_inner_edge", [](const CArray<std::uint8_t>& mk) {
    const auto parts = split_inner_edge(mask_from(mk));
    return py::make_tuple(parts.inner, parts.edge);
  });
  m.def("rate_mask", [](const CArray<std::uint8_t>& mk, const CArray<double>& a) {
    return rate_mask(mask_from(mk), grid_from<double>(a, "affinity"));
  });
  m.def("select_top_q", [](const std::vector<double>& ratings, const CArray<std::uint8_t>& masks, double q) {
    const auto stack = masks_from(masks);
    if (stack.size() != ratings.size()) throw py::value_error("one rating per mask required");
    std::vector<ScoredMask> scored;
    for (std::size_t i = 0; i < stack.size(); ++i) scored.push_back({stack[i], ratings[i], false});
    std::vector<bool> kept;
    for (const auto& s : select_top_q(std::move(scored), q)) kept.push_back(s.kept);
    return kept;
  }, py::arg("ratings"), py::arg("masks"), py::arg("q_percent") = 60.0);

  // superpixel
  m.def("rgb_to_lab", [](int r, int g, int b) {
    const auto lab = rgb_to_lab(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b));
    return py::make_tuple(lab.l, lab.a, lab.b);
  });
  m.def("snic_superpixels", [](const CArray<std::uint8_t>& img, int k_target, double compactness) {
    return seg_to_dict(snic_superpixels(image_from(img), {k_target, compactness}));
  }, py::arg("image"), py::arg("k_target") = 300, py::arg("compactness") = 10.0);
  m.def("ingest_labels", [](const CArray<std::int32_t>& labels, const CArray<std::uint8_t>& img) {
    return seg_to_dict(ingest_labels(grid_from<std::int32_t>(labels, "labels"), image_from(img)));
  });

  // sgmloss
  m.def("affinity_tree", [](int k, const std::vector<std::tuple<int, int, double>>& edges) {
    std::vector<SuperpixelEdge> es;
    for (const auto& [a, b, w] : edges) es.push_back({std::min(a, b), std::max(a, b), w});
    const auto tree = build_affinity_tree(k, es);
    std::vector<std::tuple<int, int, double>> mst;
    for (const auto& e : tree.mst_edges) mst.emplace_back(e.m, e.n, e.w);
    py::array_t<double> pathmax({k, k});
    std::copy(tree.pathmax.values.begin(), tree.pathmax.values.end(), pathmax.mutable_data());
    return py::make_tuple(mst, pathmax);
  });
  m.def("sgm_loss", [](const CArray<double>& prob, const CArray<std::uint8_t>& mask,
                       const CArray<std::int32_t>& labels, const CArray<std::uint8_t>& img,
                       double alpha1, double alpha2, bool include_self, bool grad_through_target) {
    const auto seg = ingest_labels(grid_from<std::int32_t>(labels, "labels"), image_from(img));
    HyperParams hp;
    hp.alpha1 = alpha1;
    hp.alpha2 = alpha2;
    const auto r = sgm_loss(grid_from<double>(prob, "prob"), mask_from(mask), seg, hp,
                            {include_self, grad_through_target});
    py::dict d;
    d["hard"] = r.hard;
    d["soft"] = r.soft;
    d["total"] = r.total;
    d["n_s"] = r.n_labeled;
    d["no_labeled_superpixels"] = r.no_labeled_superpixels;
    d["grad"] = to_numpy(r.grad);
    d["p_super"] = r.p_super;
    d["p_hat"] = r.p_hat;
    return d;
  }, py::arg("prob"), py::arg("mask"), py::arg("labels"), py::arg("image"), py::arg("alpha1") = 100.0,
     py::arg("alpha2") = 200.0, py::arg("include_self") = true, py::arg("grad_through_target") = false);

  // selftrain
  m.def("iou", [](const CArray<std::uint8_t>& a, const CArray<std::uint8_t>& b) { return iou(mask_from(a), mask_from(b)); });
  m.def("stability_score", [](const CArray<std::uint8_t>& last, const std::vector<CArray<std::uint8_t>>& intermediates) {
    std::vector<CheckpointMaskSet> sets;
    int id = 1;
    for (const auto& stack : intermediates) {
      CheckpointMaskSet s{id++, {}};
      for (auto& mk : masks_from(stack)) s.masks.push_back({"", std::move(mk)});
      sets.push_back(std::move(s));
    }
    return stability_score({"", mask_from(last)}, sets);
  });
  m.def("minmax_normalize", &minmax_normalize, py::arg("scores"), py::arg("epsilon") = 0.6);
  m.def("distance_transform", [](const CArray<std::uint8_t>& mk) { return to_numpy(distance_transform(mask_from(mk))); });
  m.def("weight_map", [](const CArray<std::uint8_t>& mk, double z_bar, double d_hat) {
    return to_numpy(weight_map(mask_from(mk), z_bar, d_hat));
  }, py::arg("mask"), py::arg("z_bar"), py::arg("d_hat") = 3.0);
  m.def("adaptive_loss", [](const CArray<double>& prob, const CArray<std::uint8_t>& target, const CArray<double>& w) {
    const auto r = adaptive_loss(grid_from<double>(prob, "prob"), mask_from(target), grid_from<double>(w, "weights"));
    return py::make_tuple(r.value, to_numpy(r.grad));
  });

  // overlay
  m.def("render_overlay", [](const CArray<std::uint8_t>& img, const CArray<std::uint8_t>& masks) {
    const auto stack = masks.ndim() == 3 && masks.shape(0) == 0 ? std::vector<Mask>{} : masks_from(masks);
    return image_to_numpy(render_overlay(image_from(img), stack));
  });
}
