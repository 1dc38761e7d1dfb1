#include "mbc/types.hpp"

#include <charconv>

namespace mbc {

const char* to_string(BehaviorClass c) {
  switch (c) {
    case BehaviorClass::Grazing: return "grazing";
    case BehaviorClass::Walking: return "walking";
    case BehaviorClass::Resting: return "resting";
    case BehaviorClass::Drinking: return "drinking";
    case BehaviorClass::Alia: return "alia";
  }
  throw std::invalid_argument("invalid behavior class code");
}

BehaviorClass behavior_from_string(const std::string& name) {
  for (int c = 0; c < kNumClasses; ++c) {
    auto cls = static_cast<BehaviorClass>(c);
    if (name == to_string(cls)) return cls;
  }
  throw std::invalid_argument("unknown behavior class: " + name);
}

std::string shortest_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace mbc
