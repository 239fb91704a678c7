#ifndef RCRTE_MODEL_IO_HPP
#define RCRTE_MODEL_IO_HPP

#include <iosfwd>
#include <string>

#include "rcrte/estimation.hpp"

namespace rcrte {

// JSON serialization of a fitted model (params, baseline jump tables,
// frailty posterior table, repair mode, training metadata). Doubles are
// written in shortest-round-trip form, so save/load is lossless.
void write_model_json(std::ostream& out, const FittedModel& model);
FittedModel read_model_json(std::istream& in);

void save_model_json(const std::string& path, const FittedModel& model);
FittedModel load_model_json(const std::string& path);

} // namespace rcrte

#endif
