#include "lomo/carrier.hpp"

namespace lomo {

using nlohmann::ordered_json;

std::string_view to_string(Route route) {
  switch (route) {
    case Route::text: return "text";
    case Route::latex: return "latex";
    case Route::latex_fallback_text: return "latex_fallback_text";
  }
  return "text";
}

std::string_view to_string(DistortionFamily family) {
  switch (family) {
    case DistortionFamily::clean: return "clean";
    case DistortionFamily::rotate: return "rotate";
    case DistortionFamily::blur: return "blur";
    case DistortionFamily::shadow_or_stain: return "shadow_or_stain";
    case DistortionFamily::wave: return "wave";
  }
  return "clean";
}

namespace {

std::string_view to_string(BlurKind k) {
  switch (k) {
    case BlurKind::gaussian: return "gaussian";
    case BlurKind::box: return "box";
    case BlurKind::motion: return "motion";
  }
  return "gaussian";
}

std::string_view to_string(Edge e) {
  switch (e) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::top: return "top";
    case Edge::bottom: return "bottom";
  }
  return "left";
}

struct ParamsToJson {
  ordered_json& j;
  void operator()(const CleanParams&) const {}
  void operator()(const RotateParams& p) const {
    j["degrees"] = p.degrees;
    j["large_angle"] = p.large_angle;
  }
  void operator()(const BlurParams& p) const {
    j["kind"] = to_string(p.kind);
    switch (p.kind) {
      case BlurKind::gaussian: j["sigma"] = p.sigma; break;
      case BlurKind::box: j["box_size"] = p.box_size; break;
      case BlurKind::motion:
        j["length"] = p.motion_length;
        j["degrees"] = p.motion_degrees;
        break;
    }
  }
  void operator()(const ShadowOrStainParams& p) const {
    j["kind"] = p.shadow ? "shadow" : "stain";
    if (p.shadow) {
      j["edge"] = to_string(p.edge);
      j["strength"] = p.strength;
    } else {
      ordered_json stains = ordered_json::array();
      for (const auto& s : p.stains)
        stains.push_back({{"cx", s.cx}, {"cy", s.cy}, {"rx", s.rx}, {"ry", s.ry},
                          {"alpha", s.alpha}});
      j["stains"] = std::move(stains);
    }
  }
  void operator()(const WaveParams& p) const {
    j["amplitude"] = p.amplitude;
    j["wavelength"] = p.wavelength;
  }
};

}  // namespace

ordered_json to_json(const DistortionChoice& choice) {
  ordered_json j;
  j["family"] = to_string(choice.family());
  j["seed"] = choice.seed;
  ordered_json params = ordered_json::object();
  std::visit(ParamsToJson{params}, choice.params);
  j["params"] = std::move(params);
  return j;
}

ImageMetadata carrier_metadata(const RenderedCarrier& carrier) {
  ImageMetadata m;
  m[kMetaSourceSpan] = carrier.source_span;
  m[kMetaRoute] = std::string(to_string(carrier.route));
  if (carrier.distortion) m[kMetaDistortion] = to_json(*carrier.distortion).dump();
  return m;
}

ordered_json carrier_record(const RenderedCarrier& carrier, const std::string& image_path) {
  ordered_json j;
  j["image_path"] = image_path;
  j["source_span"] = carrier.source_span;
  j["route"] = to_string(carrier.route);
  j["width"] = carrier.width();
  j["height"] = carrier.height();
  if (carrier.blank) j["blank"] = true;
  if (!carrier.fallback_reason.empty()) j["fallback_reason"] = carrier.fallback_reason;
  j["distortion"] = carrier.distortion ? to_json(*carrier.distortion) : ordered_json(nullptr);
  return j;
}

}  // namespace lomo
