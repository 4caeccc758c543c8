#include "vecfit/error.hpp"
#include "vecfit/svg.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace vecfit {

namespace {

class PathLexer {
 public:
  explicit PathLexer(std::string_view text) : text_(text) {}

  void skip_separators() {
    while (pos_ < text_.size() &&
           (std::isspace(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == ','))
      ++pos_;
  }

  bool at_end() {
    skip_separators();
    return pos_ >= text_.size();
  }

  bool next_is_command() {
    skip_separators();
    return pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != 'e' && text_[pos_] != 'E';
  }

  bool next_is_number() {
    skip_separators();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
  }

  char command() {
    skip_separators();
    return text_[pos_++];
  }

  double number() {
    skip_separators();
    // SVG numbers allow "1.5.5" (two numbers) and "-1-2"; scan the longest valid prefix.
    std::size_t end = pos_;
    if (end < text_.size() && (text_[end] == '+' || text_[end] == '-')) ++end;
    bool digits = false;
    while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) {
      ++end;
      digits = true;
    }
    if (end < text_.size() && text_[end] == '.') {
      ++end;
      while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) {
        ++end;
        digits = true;
      }
    }
    if (!digits) fail("expected a number");
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t exp = end + 1;
      if (exp < text_.size() && (text_[exp] == '+' || text_[exp] == '-')) ++exp;
      if (exp < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp]))) {
        while (exp < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp]))) ++exp;
        end = exp;
      }
    }
    std::string token(text_.substr(pos_, end - pos_));
    if (token.front() == '+') token.erase(0, 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) fail("bad number '" + token + "'");
    pos_ = end;
    return value;
  }

  bool flag() {
    skip_separators();
    if (pos_ >= text_.size() || (text_[pos_] != '0' && text_[pos_] != '1'))
      fail("expected an arc flag");
    return text_[pos_++] == '1';
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw MalformedPath("path data: " + what + " at offset " + std::to_string(pos_));
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

struct Segment {
  Point c1, c2, end;
};

class LoopBuilder {
 public:
  void move_to(const Point& p, std::vector<Subpath>& out) {
    finish(out);
    start_ = p;
    current_ = p;
    open_ = true;
  }

  void line_to(const Point& p) {
    ensure_open();
    segments_.push_back({current_ + (p - current_) / 3.0, current_ + 2.0 * (p - current_) / 3.0, p});
    current_ = p;
  }

  void cubic_to(const Point& c1, const Point& c2, const Point& p) {
    ensure_open();
    segments_.push_back({c1, c2, p});
    current_ = p;
  }

  void close(std::vector<Subpath>& out) {
    finish(out);
    current_ = start_;
  }

  void finish(std::vector<Subpath>& out) {
    if (!open_) return;
    open_ = false;
    if (segments_.empty()) return;
    if (segments_.back().end != start_) line_to_closing();
    Subpath sub;
    sub.points.reserve(segments_.size() * 3);
    Point anchor = start_;
    for (const Segment& s : segments_) {
      sub.points.push_back(anchor);
      sub.points.push_back(s.c1);
      sub.points.push_back(s.c2);
      anchor = s.end;
    }
    segments_.clear();
    out.push_back(std::move(sub));
  }

  const Point& current() const { return current_; }

 private:
  void ensure_open() {
    if (!open_) {
      start_ = current_;
      open_ = true;
    }
  }

  void line_to_closing() {
    const Point from = segments_.back().end;
    segments_.push_back({from + (start_ - from) / 3.0, from + 2.0 * (start_ - from) / 3.0, start_});
  }

  Point start_ = Point::Zero();
  Point current_ = Point::Zero();
  bool open_ = false;
  std::vector<Segment> segments_;
};

// Radial deviation of the standard 4/3 tan(theta/4) cubic arc for a unit circle.
double arc_cubic_error(double sweep) {
  const double s = std::sin(sweep / 4.0);
  const double c = std::cos(sweep / 4.0);
  return 4.0 / 27.0 * std::pow(s, 6) / (c * c);
}

}  // namespace

void arc_to_cubics(const Point& from, double rx, double ry, double x_axis_rotation_deg,
                   bool large_arc, bool sweep, const Point& to, std::vector<Point>& out,
                   double tolerance) {
  rx = std::abs(rx);
  ry = std::abs(ry);
  if (from == to) return;
  if (rx == 0.0 || ry == 0.0) {
    out.push_back(from + (to - from) / 3.0);
    out.push_back(from + 2.0 * (to - from) / 3.0);
    out.push_back(to);
    return;
  }
  const double phi = x_axis_rotation_deg * std::numbers::pi / 180.0;
  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const Point half = (from - to) / 2.0;
  const Point p1(cphi * half.x() + sphi * half.y(), -sphi * half.x() + cphi * half.y());

  const double lambda = (p1.x() * p1.x()) / (rx * rx) + (p1.y() * p1.y()) / (ry * ry);
  if (lambda > 1.0) {
    rx *= std::sqrt(lambda);
    ry *= std::sqrt(lambda);
  }
  const double num = rx * rx * ry * ry - rx * rx * p1.y() * p1.y() - ry * ry * p1.x() * p1.x();
  const double den = rx * rx * p1.y() * p1.y() + ry * ry * p1.x() * p1.x();
  double coef = std::sqrt(std::max(0.0, num / den));
  if (large_arc == sweep) coef = -coef;
  const Point cprime(coef * rx * p1.y() / ry, -coef * ry * p1.x() / rx);
  const Point mid = (from + to) / 2.0;
  const Point center(cphi * cprime.x() - sphi * cprime.y() + mid.x(),
                     sphi * cprime.x() + cphi * cprime.y() + mid.y());

  auto angle = [](const Point& u, const Point& v) {
    return std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
  };
  const Point u((p1.x() - cprime.x()) / rx, (p1.y() - cprime.y()) / ry);
  const Point v((-p1.x() - cprime.x()) / rx, (-p1.y() - cprime.y()) / ry);
  const double theta1 = angle(Point(1.0, 0.0), u);
  double dtheta = angle(u, v);
  if (!sweep && dtheta > 0) dtheta -= 2.0 * std::numbers::pi;
  if (sweep && dtheta < 0) dtheta += 2.0 * std::numbers::pi;

  const double radius = std::max(rx, ry);
  int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(dtheta) / (std::numbers::pi / 2.0))));
  while (radius * arc_cubic_error(std::abs(dtheta) / pieces) > tolerance && pieces < 1024) ++pieces;

  const double step = dtheta / pieces;
  const double k = 4.0 / 3.0 * std::tan(step / 4.0);
  auto on_ellipse = [&](double t) {
    const double x = rx * std::cos(t);
    const double y = ry * std::sin(t);
    return Point(cphi * x - sphi * y + center.x(), sphi * x + cphi * y + center.y());
  };
  auto derivative = [&](double t) {
    const double x = -rx * std::sin(t);
    const double y = ry * std::cos(t);
    return Point(cphi * x - sphi * y, sphi * x + cphi * y);
  };
  double t = theta1;
  Point start = from;
  for (int i = 0; i < pieces; ++i) {
    const double t2 = t + step;
    const Point end = (i + 1 == pieces) ? to : on_ellipse(t2);
    out.push_back(start + k * derivative(t));
    out.push_back(end - k * derivative(t2));
    out.push_back(end);
    start = end;
    t = t2;
  }
}

std::vector<Subpath> parse_path_data(std::string_view d, const Affine2& transform) {
  PathLexer lex(d);
  LoopBuilder loop;
  std::vector<Subpath> out;
  char command = 0;
  Point last_cubic_handle = Point::Zero();
  Point last_quad_handle = Point::Zero();
  char previous = 0;

  while (!lex.at_end()) {
    if (lex.next_is_command()) {
      command = lex.command();
    } else if (command == 0) {
      lex.fail("path data must start with a command");
    } else if (command == 'M') {
      command = 'L';  // implicit lineto after moveto
    } else if (command == 'm') {
      command = 'l';
    } else if (command == 'Z' || command == 'z') {
      lex.fail("numbers after closepath");
    }
    const bool rel = std::islower(static_cast<unsigned char>(command)) != 0;
    const Point base = rel ? loop.current() : Point::Zero();
    auto point = [&]() -> Point {
      const double x = lex.number();
      const double y = lex.number();
      return Point(x, y) + base;
    };
    const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(command)));
    switch (upper) {
      case 'M':
        loop.move_to(point(), out);
        break;
      case 'L':
        loop.line_to(point());
        break;
      case 'H': {
        const double x = lex.number() + base.x();
        loop.line_to(Point(x, loop.current().y()));
        break;
      }
      case 'V': {
        const double y = lex.number() + base.y();
        loop.line_to(Point(loop.current().x(), y));
        break;
      }
      case 'C': {
        const Point c1 = point();
        const Point c2 = point();
        const Point p = point();
        loop.cubic_to(c1, c2, p);
        last_cubic_handle = c2;
        break;
      }
      case 'S': {
        const bool follows = previous == 'C' || previous == 'S';
        const Point c1 = follows ? Point(2.0 * loop.current() - last_cubic_handle) : loop.current();
        const Point c2 = point();
        const Point p = point();
        loop.cubic_to(c1, c2, p);
        last_cubic_handle = c2;
        break;
      }
      case 'Q': {
        const Point q = point();
        const Point p = point();
        const Point p0 = loop.current();
        loop.cubic_to(p0 + 2.0 / 3.0 * (q - p0), p + 2.0 / 3.0 * (q - p), p);
        last_quad_handle = q;
        break;
      }
      case 'T': {
        const bool follows = previous == 'Q' || previous == 'T';
        const Point p0 = loop.current();
        const Point q = follows ? Point(2.0 * p0 - last_quad_handle) : p0;
        const Point p = point();
        loop.cubic_to(p0 + 2.0 / 3.0 * (q - p0), p + 2.0 / 3.0 * (q - p), p);
        last_quad_handle = q;
        break;
      }
      case 'A': {
        const double rx = lex.number();
        const double ry = lex.number();
        const double rotation = lex.number();
        const bool large = lex.flag();
        const bool sweep = lex.flag();
        const Point p = point();
        std::vector<Point> pieces;
        arc_to_cubics(loop.current(), rx, ry, rotation, large, sweep, p, pieces);
        for (std::size_t i = 0; i + 2 < pieces.size(); i += 3)
          loop.cubic_to(pieces[i], pieces[i + 1], pieces[i + 2]);
        break;
      }
      case 'Z':
        loop.close(out);
        break;
      default:
        lex.fail(std::string("unknown command '") + command + "'");
    }
    previous = upper;
    if (upper == 'Z' && lex.next_is_number()) lex.fail("numbers after closepath");
  }
  loop.finish(out);

  for (Subpath& sub : out)
    for (Point& p : sub.points) p = transform.leftCols<2>() * p + transform.col(2);
  return out;
}

}  // namespace vecfit
