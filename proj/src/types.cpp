#include "pacfs/types.hpp"

namespace pacfs {

Points Dataset::all_points() const {
  Points all(train_x.rows() + test_x.rows(), train_x.cols());
  if (train_x.rows() > 0) all.topRows(train_x.rows()) = train_x;
  if (test_x.rows() > 0) all.bottomRows(test_x.rows()) = test_x;
  return all;
}

}  // namespace pacfs
