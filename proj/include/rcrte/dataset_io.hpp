#ifndef RCRTE_DATASET_IO_HPP
#define RCRTE_DATASET_IO_HPP

#include <iosfwd>
#include <string>

#include "rcrte/event_history.hpp"

namespace rcrte {

// Event-history files are JSON Lines: one object per unit with fields
//   unit_id (string), q (int, optional), tau (number),
//   te_time (number or null/absent), covariates (array of numbers),
//   events (array of {time, risk}).
// Q is taken from the "q" fields when present (and must agree across
// records), otherwise inferred as the largest risk index in the file; p is
// inferred from the covariate vectors and must be constant.
Dataset read_dataset_jsonl(std::istream& in);
Dataset load_dataset_jsonl(const std::string& path);
void write_dataset_jsonl(std::ostream& out, const Dataset& data);
void save_dataset_jsonl(const std::string& path, const Dataset& data);

// Tabular import: CSV with header
//   unit_id,tau,te_time,event_time,risk,x1,...,xp
// One row per event; a unit with no events contributes a single row with
// empty event_time/risk. te_time is empty for censored units and must be
// identical on every row of a unit (as must tau and the covariates).
Dataset read_dataset_table(std::istream& in);
Dataset load_dataset_table(const std::string& path);

// Dispatches on extension: ".csv" -> tabular, anything else -> JSON Lines.
Dataset load_dataset_auto(const std::string& path);

} // namespace rcrte

#endif
