#include "sgar/types.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace sgar {

namespace {

// Key for the configured ordering: primary coordinate first, the other
// coordinate breaks ties.
std::pair<double, double> order_key(const Point2& p, PointOrder order) {
  return order == PointOrder::AscX ? std::make_pair(p.x, p.y)
                                   : std::make_pair(p.y, p.x);
}

bool box_valid(const Box& b) {
  return b.w > 0.0 && b.h > 0.0 && b.cx >= 0.0 && b.cx <= 1.0 && b.cy >= 0.0 &&
         b.cy <= 1.0;
}

}  // namespace

std::vector<Point2> sort_member_points(std::vector<Point2> points, PointOrder order) {
  if (points.empty()) {
    throw std::invalid_argument("sort_member_points: empty point sequence");
  }
  std::sort(points.begin(), points.end(), [order](const Point2& a, const Point2& b) {
    return order_key(a, order) < order_key(b, order);
  });
  return points;
}

std::vector<int> sort_permutation(const std::vector<Point2>& points, PointOrder order) {
  std::vector<int> perm(points.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) {
    return order_key(points[a], order) < order_key(points[b], order);
  });
  return perm;
}

std::vector<std::string> validate_scene(const Scene& scene, const HyperParams& hp,
                                        PointOrder order) {
  std::vector<std::string> errors;
  auto add = [&errors](const std::string& msg) { errors.push_back(msg); };

  const int n_persons = static_cast<int>(scene.persons.size());

  for (int p = 0; p < n_persons; ++p) {
    const auto& person = scene.persons[p];
    std::ostringstream tag;
    tag << "person " << p << ": ";
    if (person.action.size() != hp.N_a) {
      add(tag.str() + "action vector has length " + std::to_string(person.action.size()) +
          ", expected " + std::to_string(hp.N_a));
    }
    if (!box_valid(person.box)) {
      add(tag.str() + "invalid box (center outside [0,1] or non-positive extent)");
    }
  }

  std::unordered_set<int> claimed;
  for (size_t g = 0; g < scene.groups.size(); ++g) {
    const auto& group = scene.groups[g];
    std::ostringstream tag;
    tag << "group " << g << ": ";

    if (group.activity.size() != hp.N_v) {
      add(tag.str() + "activity vector has length " + std::to_string(group.activity.size()) +
          ", expected " + std::to_string(hp.N_v));
    }
    if (group.size < 1 || group.size > hp.M) {
      add(tag.str() + "size " + std::to_string(group.size) + " outside [1, " +
          std::to_string(hp.M) + "]");
    }
    if (static_cast<int>(group.member_indices.size()) != group.size) {
      add(tag.str() + "member_indices count " + std::to_string(group.member_indices.size()) +
          " does not equal size " + std::to_string(group.size));
    }
    if (static_cast<int>(group.member_points.size()) != group.size) {
      add(tag.str() + "member_points count " + std::to_string(group.member_points.size()) +
          " does not equal size " + std::to_string(group.size));
    }

    std::unordered_set<int> local;
    for (int idx : group.member_indices) {
      if (idx < 0 || idx >= n_persons) {
        add(tag.str() + "member index " + std::to_string(idx) + " out of range");
        continue;
      }
      if (!local.insert(idx).second) {
        add(tag.str() + "member index " + std::to_string(idx) + " repeated within group");
      } else if (!claimed.insert(idx).second) {
        add(tag.str() + "person " + std::to_string(idx) + " belongs to more than one group");
      }
    }

    for (size_t k = 0; k + 1 < group.member_points.size(); ++k) {
      if (order_key(group.member_points[k + 1], order) <
          order_key(group.member_points[k], order)) {
        add(tag.str() + "member_points not sorted at position " + std::to_string(k + 1));
        break;
      }
    }
    for (size_t k = 0; k < group.member_points.size(); ++k) {
      const auto& pt = group.member_points[k];
      if (pt.x < 0.0 || pt.x > 1.0 || pt.y < 0.0 || pt.y > 1.0) {
        add(tag.str() + "member point " + std::to_string(k) + " outside [0,1]^2");
      }
    }
  }

  if (scene.tokens.size() < scene.persons.size()) {
    add("scene has fewer tokens (" + std::to_string(scene.tokens.size()) + ") than persons (" +
        std::to_string(scene.persons.size()) + ")");
  }
  for (size_t t = 0; t < scene.tokens.size(); ++t) {
    if (scene.tokens[t].size() != hp.D_tok) {
      add("token " + std::to_string(t) + " has dimension " +
          std::to_string(scene.tokens[t].size()) + ", expected " + std::to_string(hp.D_tok));
    }
  }

  return errors;
}

}  // namespace sgar
