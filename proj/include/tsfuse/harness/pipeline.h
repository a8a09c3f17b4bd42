#ifndef TSFUSE_HARNESS_PIPELINE_H_
#define TSFUSE_HARNESS_PIPELINE_H_

#include <string>
#include <vector>

#include "tsfuse/harness/experiment.h"

namespace tsfuse::harness {

// Dataset names from the config, or every directory under the data root.
std::vector<std::string> resolve_datasets(const ExperimentConfig& cfg);
std::vector<fusion::Family> resolve_families(const ExperimentConfig& cfg);

// Each stage reads the outputs of earlier stages from cfg.out.
void stage_ingest(const ExperimentConfig& cfg);     // datasets.csv
void stage_features(const ExperimentConfig& cfg);   // features/
void stage_train(const ExperimentConfig& cfg);      // results/, predictions/
void stage_metafeatures(const ExperimentConfig& cfg);  // meta_features.csv
void stage_cluster(const ExperimentConfig& cfg);    // regimes.csv, linkage.json
void stage_evaluate(const ExperimentConfig& cfg);   // accuracy.csv
void stage_compare(const ExperimentConfig& cfg);    // comparison.csv
void stage_attribute(const ExperimentConfig& cfg);  // shap/
void stage_casestudy(const ExperimentConfig& cfg);  // case_study/
void stage_report(const ExperimentConfig& cfg);     // tables/, plots/
void run_all(const ExperimentConfig& cfg);

}  // namespace tsfuse::harness

#endif  // TSFUSE_HARNESS_PIPELINE_H_
