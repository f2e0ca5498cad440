#pragma once

// Dual-space visualization: the GST weight space and the emotion text
// embedding space are projected to 2-D independently (side-by-side panels,
// points colored by dominant emotion class) and rendered to one PNG.

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "temotts/core/common.hpp"
#include "temotts/eval/tsne.hpp"
#include "temotts/viz/png.hpp"

namespace temotts::eval {

struct ProjectionResult {
  std::vector<std::array<double, 2>> weight_coords;
  std::vector<std::array<double, 2>> embedding_coords;
};

inline ProjectionResult project_spaces(const std::vector<std::vector<double>>& gst_weights,
                                       const std::vector<std::vector<double>>& text_embeddings,
                                       std::uint64_t seed) {
  if (gst_weights.size() != text_embeddings.size())
    throw Error("project_spaces: row count mismatch between the two spaces");
  if (gst_weights.size() < 5)
    throw Error("project_spaces: need at least 5 points, got " +
                std::to_string(gst_weights.size()));
  TsneConfig cfg;
  cfg.seed = seed;
  ProjectionResult res;
  res.weight_coords = tsne_project(gst_weights, cfg);
  cfg.seed = seed + 1;  // independent init per space, still deterministic
  res.embedding_coords = tsne_project(text_embeddings, cfg);
  return res;
}

inline void render_projection_figure(const std::filesystem::path& path,
                                     const ProjectionResult& proj,
                                     const std::vector<std::size_t>& class_ids) {
  const std::size_t panel_w = 360, panel_h = 360, gap = 24, border = 12;
  viz::Image img(border * 2 + panel_w * 2 + gap, border * 2 + panel_h);
  viz::draw_scatter(img, proj.weight_coords, class_ids, border, border, panel_w, panel_h);
  viz::draw_scatter(img, proj.embedding_coords, class_ids, border + panel_w + gap, border,
                    panel_w, panel_h);
  viz::write_png(path, img);
}

inline void write_coords_csv(const std::filesystem::path& path, const ProjectionResult& proj,
                             const std::vector<std::string>& ids,
                             const std::vector<std::string>& classes) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << "id,class,weights_x,weights_y,embedding_x,embedding_y\n";
  os.precision(10);
  for (std::size_t i = 0; i < proj.weight_coords.size(); ++i) {
    os << (i < ids.size() ? ids[i] : std::to_string(i)) << ','
       << (i < classes.size() ? classes[i] : "") << ',' << proj.weight_coords[i][0] << ','
       << proj.weight_coords[i][1] << ',' << proj.embedding_coords[i][0] << ','
       << proj.embedding_coords[i][1] << '\n';
  }
}

}  // namespace temotts::eval
