#pragma once

#include <string>

#include "nesy/error.hpp"

namespace nesy {

enum class CompareOp { GT, GE, LT, LE, EQ, NE };

inline bool compare(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::GT: return lhs > rhs;
    case CompareOp::GE: return lhs >= rhs;
    case CompareOp::LT: return lhs < rhs;
    case CompareOp::LE: return lhs <= rhs;
    case CompareOp::EQ: return lhs == rhs;
    case CompareOp::NE: return lhs != rhs;
  }
  return false;
}

inline std::string compare_op_str(CompareOp op) {
  switch (op) {
    case CompareOp::GT: return ">";
    case CompareOp::GE: return ">=";
    case CompareOp::LT: return "<";
    case CompareOp::LE: return "<=";
    case CompareOp::EQ: return "=";
    case CompareOp::NE: return "!=";
  }
  return "?";
}

inline CompareOp parse_compare_op(const std::string& s) {
  if (s == ">") return CompareOp::GT;
  if (s == ">=") return CompareOp::GE;
  if (s == "<") return CompareOp::LT;
  if (s == "<=") return CompareOp::LE;
  if (s == "=" || s == "==") return CompareOp::EQ;
  if (s == "!=") return CompareOp::NE;
  throw ValidationError("unknown comparison operator: " + s);
}

}  // namespace nesy
