#include "vecfit/error.hpp"
#include "vecfit/svg.hpp"

#include <expat.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

namespace vecfit {

namespace {

using AttributeMap = std::map<std::string, std::string>;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> leading_number(std::string_view s) {
  const std::string t = trim(s);
  double value = 0.0;
  const char* begin = t.data();
  if (!t.empty() && t.front() == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc()) return std::nullopt;
  const std::string unit = trim(std::string_view(ptr, t.data() + t.size() - ptr));
  if (!unit.empty() && unit != "px") return std::nullopt;
  return value;
}

std::vector<double> number_list(std::string_view s) {
  std::vector<double> out;
  std::string buf(s);
  for (char& c : buf)
    if (c == ',') c = ' ';
  std::istringstream in(buf);
  in.imbue(std::locale::classic());
  double v = 0.0;
  while (in >> v) out.push_back(v);
  return out;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Affine2 identity_affine() {
  Affine2 m;
  m << 1, 0, 0, 0, 1, 0;
  return m;
}

Affine2 compose(const Affine2& outer, const Affine2& inner) {
  Affine2 out;
  out.leftCols<2>() = outer.leftCols<2>() * inner.leftCols<2>();
  out.col(2) = outer.leftCols<2>() * inner.col(2) + outer.col(2);
  return out;
}

Affine2 parse_transform(std::string_view text) {
  Affine2 result = identity_affine();
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() &&
           (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == ','))
      ++pos;
    if (pos >= text.size()) break;
    const std::size_t open = text.find('(', pos);
    const std::size_t close = text.find(')', pos);
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
      throw MalformedDocument("bad transform '" + std::string(text) + "'");
    const std::string name = trim(text.substr(pos, open - pos));
    const std::vector<double> a = number_list(text.substr(open + 1, close - open - 1));
    Affine2 m = identity_affine();
    const double deg = std::numbers::pi / 180.0;
    if (name == "matrix" && a.size() == 6) {
      m << a[0], a[2], a[4], a[1], a[3], a[5];
    } else if (name == "translate" && (a.size() == 1 || a.size() == 2)) {
      m(0, 2) = a[0];
      m(1, 2) = a.size() == 2 ? a[1] : 0.0;
    } else if (name == "scale" && (a.size() == 1 || a.size() == 2)) {
      m(0, 0) = a[0];
      m(1, 1) = a.size() == 2 ? a[1] : a[0];
    } else if (name == "rotate" && (a.size() == 1 || a.size() == 3)) {
      const double c = std::cos(a[0] * deg);
      const double s = std::sin(a[0] * deg);
      m << c, -s, 0, s, c, 0;
      if (a.size() == 3) {
        Affine2 to = identity_affine();
        Affine2 back = identity_affine();
        to.col(2) = Point(a[1], a[2]);
        back.col(2) = Point(-a[1], -a[2]);
        m = compose(to, compose(m, back));
      }
    } else if (name == "skewX" && a.size() == 1) {
      m(0, 1) = std::tan(a[0] * deg);
    } else if (name == "skewY" && a.size() == 1) {
      m(1, 0) = std::tan(a[0] * deg);
    } else {
      throw MalformedDocument("bad transform '" + std::string(text) + "'");
    }
    result = compose(result, m);
    pos = close + 1;
  }
  return result;
}

const std::map<std::string, Rgb>& named_colors() {
  static const std::map<std::string, Rgb> table = [] {
    std::map<std::string, Rgb> t;
    auto add = [&](const char* name, int r, int g, int b) {
      t[name] = Rgb(r / 255.0, g / 255.0, b / 255.0);
    };
    add("black", 0, 0, 0);
    add("white", 255, 255, 255);
    add("red", 255, 0, 0);
    add("lime", 0, 255, 0);
    add("green", 0, 128, 0);
    add("blue", 0, 0, 255);
    add("yellow", 255, 255, 0);
    add("cyan", 0, 255, 255);
    add("aqua", 0, 255, 255);
    add("magenta", 255, 0, 255);
    add("fuchsia", 255, 0, 255);
    add("gray", 128, 128, 128);
    add("grey", 128, 128, 128);
    add("silver", 192, 192, 192);
    add("maroon", 128, 0, 0);
    add("olive", 128, 128, 0);
    add("purple", 128, 0, 128);
    add("teal", 0, 128, 128);
    add("navy", 0, 0, 128);
    add("orange", 255, 165, 0);
    add("brown", 165, 42, 42);
    add("pink", 255, 192, 203);
    add("gold", 255, 215, 0);
    return t;
  }();
  return table;
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

struct Paint {
  std::string fill = "black";
  std::string stroke = "none";
  std::string fill_rule = "nonzero";
  std::string opacity = "1";
  std::string fill_opacity = "1";
};

AttributeMap collect_attributes(const XML_Char** atts) {
  AttributeMap map;
  for (int i = 0; atts[i] != nullptr; i += 2) map[atts[i]] = atts[i + 1];
  const auto style = map.find("style");
  if (style != map.end()) {
    std::string decls = style->second;
    std::size_t pos = 0;
    while (pos < decls.size()) {
      std::size_t end = decls.find(';', pos);
      if (end == std::string::npos) end = decls.size();
      const std::string decl = decls.substr(pos, end - pos);
      const std::size_t colon = decl.find(':');
      if (colon != std::string::npos) map[trim(decl.substr(0, colon))] = trim(decl.substr(colon + 1));
      pos = end + 1;
    }
  }
  return map;
}

struct GroupFrame {
  Affine2 transform;
  Paint paint;
  int group = -1;
};

class DocumentBuilder {
 public:
  DocumentBuilder(const ParseOptions& options, std::vector<std::string>* warnings)
      : options_(options), warnings_(warnings) {}

  void start(const std::string& name, const AttributeMap& attrs) {
    if (skip_depth_ > 0) {
      ++skip_depth_;
      return;
    }
    ++depth_;
    element_stack_.push_back(name);
    if (depth_ == 1) {
      if (name != "svg") throw MalformedDocument("root element must be <svg>, got <" + name + ">");
      start_root(attrs);
      return;
    }
    if (name == "title" || name == "desc" || name == "metadata") {
      skip_subtree();
      return;
    }
    if (name == "animate" || name == "set" || name == "animateTransform" ||
        name == "animateMotion") {
      if (!options_.skip_animations) throw UnsupportedFeature("unsupported element <" + name + ">");
      skip_subtree();
      return;
    }
    if (name == "defs") {
      in_defs_ = true;
      return;
    }
    if (in_defs_) throw UnsupportedFeature("unsupported element <" + name + "> inside <defs>");
    if (name == "g") {
      start_group(attrs);
      return;
    }
    if (name == "path" || name == "rect" || name == "circle" || name == "ellipse" ||
        name == "polygon" || name == "line") {
      add_shape(name, attrs);
      return;
    }
    throw UnsupportedFeature("unsupported element <" + name + ">");
  }

  void end() {
    if (skip_depth_ > 0) {
      --skip_depth_;
      return;
    }
    const std::string name = element_stack_.back();
    element_stack_.pop_back();
    --depth_;
    if (name == "g" && frames_.size() > 1) frames_.pop_back();
    if (name == "defs") in_defs_ = false;
  }

  SvgDocument finish() {
    if (!saw_root_) throw MalformedDocument("no <svg> element");
    // Drop groups that never received a path, then renumber.
    std::vector<int> remap(doc_.groups.size(), -1);
    std::vector<Group> kept;
    for (std::size_t g = 0; g < doc_.groups.size(); ++g) {
      if (doc_.groups[g].path_indices.empty()) continue;
      remap[g] = static_cast<int>(kept.size());
      kept.push_back(std::move(doc_.groups[g]));
    }
    doc_.groups = std::move(kept);
    for (PathGeometry& p : doc_.paths) p.group = remap[p.group];
    doc_.painter_order.resize(doc_.paths.size());
    for (std::size_t i = 0; i < doc_.paths.size(); ++i) doc_.painter_order[i] = static_cast<int>(i);
    doc_.update_centroids();
    return std::move(doc_);
  }

 private:
  void skip_subtree() {
    element_stack_.pop_back();
    --depth_;
    skip_depth_ = 1;
  }

  void warn(const std::string& message) {
    if (warnings_ != nullptr) warnings_->push_back(message);
  }

  void start_root(const AttributeMap& attrs) {
    saw_root_ = true;
    std::optional<double> width;
    std::optional<double> height;
    if (auto it = attrs.find("width"); it != attrs.end()) width = leading_number(it->second);
    if (auto it = attrs.find("height"); it != attrs.end()) height = leading_number(it->second);
    std::optional<std::array<double, 4>> view_box;
    if (auto it = attrs.find("viewBox"); it != attrs.end()) {
      const std::vector<double> v = number_list(it->second);
      if (v.size() != 4 || v[2] <= 0.0 || v[3] <= 0.0)
        throw MalformedDocument("invalid viewBox '" + it->second + "'");
      view_box = std::array<double, 4>{v[0], v[1], v[2], v[3]};
    }
    if (!view_box && !(width && height))
      throw MalformedDocument("<svg> needs a viewBox or width and height");
    doc_.canvas_width = width ? *width : (*view_box)[2];
    doc_.canvas_height = height ? *height : (*view_box)[3];
    if (!(doc_.canvas_width > 0.0) || !(doc_.canvas_height > 0.0))
      throw MalformedDocument("canvas size must be positive");
    Affine2 root = identity_affine();
    if (view_box) {
      const double sx = doc_.canvas_width / (*view_box)[2];
      const double sy = doc_.canvas_height / (*view_box)[3];
      root << sx, 0, -(*view_box)[0] * sx, 0, sy, -(*view_box)[1] * sy;
    }
    GroupFrame frame;
    frame.transform = root;
    apply_paint(attrs, frame.paint);
    if (auto it = attrs.find("transform"); it != attrs.end())
      frame.transform = compose(frame.transform, parse_transform(it->second));
    frames_.push_back(frame);
  }

  void start_group(const AttributeMap& attrs) {
    if (frames_.size() > 1) throw UnsupportedFeature("nested <g> groups are not supported");
    check_unsupported_attributes("g", attrs);
    GroupFrame frame = frames_.back();
    apply_paint(attrs, frame.paint);
    if (auto it = attrs.find("transform"); it != attrs.end())
      frame.transform = compose(frame.transform, parse_transform(it->second));
    std::string id;
    if (auto it = attrs.find("id"); it != attrs.end()) id = it->second;
    if (id.empty()) id = "g" + std::to_string(doc_.groups.size());
    const auto known = group_by_id_.find(id);
    if (known != group_by_id_.end()) {
      frame.group = known->second;
    } else {
      frame.group = static_cast<int>(doc_.groups.size());
      Group g;
      g.id = id;
      doc_.groups.push_back(g);
      group_by_id_[id] = frame.group;
    }
    frames_.push_back(frame);
  }

  void apply_paint(const AttributeMap& attrs, Paint& paint) {
    if (auto it = attrs.find("fill"); it != attrs.end()) paint.fill = trim(it->second);
    if (auto it = attrs.find("stroke"); it != attrs.end()) paint.stroke = trim(it->second);
    if (auto it = attrs.find("fill-rule"); it != attrs.end()) paint.fill_rule = trim(it->second);
    if (auto it = attrs.find("opacity"); it != attrs.end()) paint.opacity = trim(it->second);
    if (auto it = attrs.find("fill-opacity"); it != attrs.end())
      paint.fill_opacity = trim(it->second);
  }

  void check_unsupported_attributes(const std::string& element, const AttributeMap& attrs) {
    for (const char* key : {"clip-path", "mask", "filter"})
      if (attrs.count(key) != 0)
        throw UnsupportedFeature("attribute '" + std::string(key) + "' on <" + element + ">");
  }

  // Returns false when the element should be dropped (non-strict mode only).
  bool validate_paint(const std::string& element, const Paint& paint, Rgb& fill) {
    if (paint.stroke != "none") {
      if (options_.strict) throw UnsupportedFeature("stroke on <" + element + "> (only fills are supported)");
      warn("ignoring stroke on <" + element + ">");
    }
    for (const std::string* alpha : {&paint.opacity, &paint.fill_opacity}) {
      const auto v = leading_number(*alpha);
      if (!v || *v != 1.0) {
        if (options_.strict) throw UnsupportedFeature("opacity on <" + element + ">");
        warn("ignoring opacity on <" + element + ">");
      }
    }
    if (paint.fill_rule != "nonzero") {
      if (options_.strict) throw UnsupportedFeature("fill-rule '" + paint.fill_rule + "' on <" + element + ">");
      warn("treating fill-rule '" + paint.fill_rule + "' as nonzero on <" + element + ">");
    }
    if (paint.fill.rfind("url(", 0) == 0)
      throw UnsupportedFeature("paint server fill on <" + element + "> (gradients/patterns)");
    if (paint.fill == "none") {
      if (options_.strict) throw UnsupportedFeature("fill=\"none\" on <" + element + ">");
      warn("dropping unfilled <" + element + ">");
      return false;
    }
    fill = parse_color(paint.fill);
    return true;
  }

  double attr_number(const AttributeMap& attrs, const char* key, double fallback = 0.0) {
    const auto it = attrs.find(key);
    if (it == attrs.end()) return fallback;
    const auto v = leading_number(it->second);
    if (!v) throw MalformedDocument(std::string("bad numeric attribute ") + key + "='" + it->second + "'");
    return *v;
  }

  std::string shape_to_path_data(const std::string& name, const AttributeMap& attrs) {
    auto n = format_number;
    if (name == "path") {
      const auto it = attrs.find("d");
      return it == attrs.end() ? std::string() : it->second;
    }
    if (name == "rect") {
      const double x = attr_number(attrs, "x");
      const double y = attr_number(attrs, "y");
      const double w = attr_number(attrs, "width");
      const double h = attr_number(attrs, "height");
      if (w <= 0.0 || h <= 0.0) return {};
      double rx = attr_number(attrs, "rx", -1.0);
      double ry = attr_number(attrs, "ry", -1.0);
      if (rx < 0.0) rx = ry;
      if (ry < 0.0) ry = rx;
      rx = std::clamp(rx, 0.0, w / 2.0);
      ry = std::clamp(ry, 0.0, h / 2.0);
      if (rx <= 0.0 || ry <= 0.0)
        return "M" + n(x) + " " + n(y) + "H" + n(x + w) + "V" + n(y + h) + "H" + n(x) + "Z";
      const std::string arc = "A" + n(rx) + " " + n(ry) + " 0 0 1 ";
      return "M" + n(x + rx) + " " + n(y) + "H" + n(x + w - rx) + arc + n(x + w) + " " + n(y + ry) +
             "V" + n(y + h - ry) + arc + n(x + w - rx) + " " + n(y + h) + "H" + n(x + rx) + arc +
             n(x) + " " + n(y + h - ry) + "V" + n(y + ry) + arc + n(x + rx) + " " + n(y) + "Z";
    }
    if (name == "circle" || name == "ellipse") {
      const double cx = attr_number(attrs, "cx");
      const double cy = attr_number(attrs, "cy");
      const double rx = name == "circle" ? attr_number(attrs, "r") : attr_number(attrs, "rx");
      const double ry = name == "circle" ? rx : attr_number(attrs, "ry");
      if (rx <= 0.0 || ry <= 0.0) return {};
      const std::string arc = "A" + n(rx) + " " + n(ry) + " 0 0 1 ";
      return "M" + n(cx + rx) + " " + n(cy) + arc + n(cx) + " " + n(cy + ry) + arc + n(cx - rx) +
             " " + n(cy) + arc + n(cx) + " " + n(cy - ry) + arc + n(cx + rx) + " " + n(cy) + "Z";
    }
    if (name == "polygon") {
      const auto it = attrs.find("points");
      if (it == attrs.end()) return {};
      const std::vector<double> v = number_list(it->second);
      if (v.size() < 4 || v.size() % 2 != 0)
        throw MalformedPath("polygon points must be an even list of at least 2 points");
      std::string d = "M" + n(v[0]) + " " + n(v[1]);
      for (std::size_t i = 2; i < v.size(); i += 2) d += "L" + n(v[i]) + " " + n(v[i + 1]);
      return d + "Z";
    }
    // line
    return "M" + n(attr_number(attrs, "x1")) + " " + n(attr_number(attrs, "y1")) + "L" +
           n(attr_number(attrs, "x2")) + " " + n(attr_number(attrs, "y2")) + "Z";
  }

  void add_shape(const std::string& name, const AttributeMap& attrs) {
    check_unsupported_attributes(name, attrs);
    const GroupFrame& frame = frames_.back();
    Paint paint = frame.paint;
    apply_paint(attrs, paint);
    Affine2 transform = frame.transform;
    if (auto it = attrs.find("transform"); it != attrs.end())
      transform = compose(transform, parse_transform(it->second));
    Rgb fill;
    if (!validate_paint(name, paint, fill)) return;

    PathGeometry path;
    path.subpaths = parse_path_data(shape_to_path_data(name, attrs), transform);
    if (path.subpaths.empty()) {
      warn("dropping empty <" + name + ">");
      return;
    }
    path.fill = fill;
    path.original_fill = fill;
    const int index = static_cast<int>(doc_.paths.size());
    if (auto it = attrs.find("id"); it != attrs.end()) path.id = it->second;
    if (path.id.empty()) path.id = "path" + std::to_string(index);

    int group = frame.group;
    if (group < 0) {
      group = static_cast<int>(doc_.groups.size());
      Group g;
      g.id = path.id;
      doc_.groups.push_back(g);
    }
    path.group = group;
    doc_.groups[group].path_indices.push_back(index);
    doc_.paths.push_back(std::move(path));
  }

  const ParseOptions& options_;
  std::vector<std::string>* warnings_;
  SvgDocument doc_;
  std::vector<GroupFrame> frames_;
  std::vector<std::string> element_stack_;
  std::map<std::string, int> group_by_id_;
  int depth_ = 0;
  int skip_depth_ = 0;
  bool in_defs_ = false;
  bool saw_root_ = false;
};

struct ParserContext {
  DocumentBuilder* builder;
  std::exception_ptr error;
  XML_Parser parser;
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** atts) {
  auto* ctx = static_cast<ParserContext*>(data);
  if (ctx->error) return;
  try {
    ctx->builder->start(name, collect_attributes(atts));
  } catch (...) {
    ctx->error = std::current_exception();
    XML_StopParser(ctx->parser, XML_FALSE);
  }
}

void XMLCALL on_end(void* data, const XML_Char*) {
  auto* ctx = static_cast<ParserContext*>(data);
  if (ctx->error) return;
  ctx->builder->end();
}

}  // namespace

Rgb parse_color(std::string_view text) {
  const std::string s = lower(trim(text));
  if (!s.empty() && s[0] == '#') {
    if (s.size() == 4 || s.size() == 7) {
      std::array<int, 6> d{};
      const std::size_t n = s.size() - 1;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = hex_digit(s[i + 1]);
        if (d[i] < 0) throw MalformedDocument("bad color '" + s + "'");
      }
      if (n == 3) return Rgb(d[0] * 17, d[1] * 17, d[2] * 17) / 255.0;
      return Rgb(d[0] * 16 + d[1], d[2] * 16 + d[3], d[4] * 16 + d[5]) / 255.0;
    }
    throw MalformedDocument("bad color '" + s + "'");
  }
  if (s.rfind("rgb(", 0) == 0 && s.back() == ')') {
    std::string body = s.substr(4, s.size() - 5);
    std::array<double, 3> v{};
    int count = 0;
    std::size_t pos = 0;
    while (pos <= body.size() && count < 4) {
      std::size_t end = body.find(',', pos);
      if (end == std::string::npos) end = body.size();
      std::string item = trim(body.substr(pos, end - pos));
      const bool percent = !item.empty() && item.back() == '%';
      if (percent) item.pop_back();
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
      if (ec != std::errc() || ptr != item.data() + item.size() || count >= 3)
        throw MalformedDocument("bad color '" + s + "'");
      v[count++] = std::clamp(percent ? x / 100.0 : x / 255.0, 0.0, 1.0);
      pos = end + 1;
    }
    if (count != 3) throw MalformedDocument("bad color '" + s + "'");
    return Rgb(v[0], v[1], v[2]);
  }
  const auto& names = named_colors();
  const auto it = names.find(s);
  if (it == names.end()) throw UnsupportedFeature("unsupported color '" + s + "'");
  return it->second;
}

SvgDocument parse_svg(std::string_view text, const ParseOptions& options,
                      std::vector<std::string>* warnings) {
  DocumentBuilder builder(options, warnings);
  XML_Parser parser = XML_ParserCreate("UTF-8");
  ParserContext ctx{&builder, nullptr, parser};
  XML_SetUserData(parser, &ctx);
  XML_SetElementHandler(parser, on_start, on_end);
  const XML_Status status = XML_Parse(parser, text.data(), static_cast<int>(text.size()), XML_TRUE);
  std::string message;
  if (status == XML_STATUS_ERROR && !ctx.error) {
    message = std::string("XML error: ") + XML_ErrorString(XML_GetErrorCode(parser)) + " at line " +
              std::to_string(XML_GetCurrentLineNumber(parser));
  }
  XML_ParserFree(parser);
  if (ctx.error) std::rethrow_exception(ctx.error);
  if (!message.empty()) throw MalformedDocument(message);
  return builder.finish();
}

SvgDocument load_svg(const std::string& file, const ParseOptions& options,
                     std::vector<std::string>* warnings) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read '" + file + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_svg(buf.str(), options, warnings);
}

}  // namespace vecfit
