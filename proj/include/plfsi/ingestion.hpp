#pragma once

#include "plfsi/config.hpp"
#include "plfsi/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace plfsi {

inline constexpr int kMinutesPerDay = 1440;

struct NonwearRule {
    int min_run = 60;           // minutes
    int max_interruptions = 2;  // minutes with 0 < count < interruption_limit
    double interruption_limit = 5.0;
};

/// Flags non-wear minutes: maximal stretches of at least `min_run` minutes
/// that start and end with a zero count, contain only zeros apart from at
/// most `max_interruptions` minutes with counts strictly between 0 and the
/// interruption limit. Interruption minutes count toward the run length.
/// Throws InputError on negative or non-finite counts.
std::vector<bool> detect_nonwear(std::span<const double> counts, const NonwearRule& rule = {});

struct WearDay {
    long day = 0;
    int wear_minutes = 0; // <= 1440
};

struct WearRule {
    int days_required = 3;
    double hours_required = 10.0;

    int minutes_required() const;
};

/// True if at least `days_required` days have `hours_required` hours of wear.
bool qualifies(const std::vector<WearDay>& days, const WearRule& rule = {});

/// Ids (sorted) of subjects meeting the wear rule.
std::vector<std::string> filter_participants(const std::map<std::string, std::vector<WearDay>>& records,
                                             const WearRule& rule = {});

/// Raw covariate row with declared roles already separated.
struct CovariateRow {
    std::string subject_id;
    Eigen::VectorXd x;
    Eigen::VectorXd z;
    double weight = 1.0;
    std::string stratum = "1";
    std::string psu;
};

namespace exclusion {
inline constexpr const char* insufficient_wear = "insufficient_wear_days";
inline constexpr const char* no_wear_data = "no_wear_data";
} // namespace exclusion

struct Exclusion {
    std::string subject_id;
    std::string reason;
};

struct IngestResult {
    Dataset data;
    std::vector<Exclusion> exclusions;
    std::map<std::string, std::vector<WearDay>> wear; // all subjects
};

/// Series CSV `subject_id,time_days,measurement`, one row per minute.
std::map<std::string, RawActivitySeries> read_series_csv(std::istream& in, const std::string& source = "<series>");

/// Covariate rows per the [data] roles. Categorical columns are dummy coded
/// against their first level in sorted order; interactions "a:b" are the
/// products of the coded columns. Numeric columns (including interactions
/// with a numeric factor) are standardized with the sample sd when
/// requested; pure dummy columns are left as 0/1.
struct CovariateTable {
    std::vector<CovariateRow> rows; // sorted by subject id
    std::vector<std::string> x_names;
    std::vector<std::string> z_names;
    Standardization x_standardization;
    Standardization z_standardization;
};

CovariateTable read_covariates_csv(std::istream& in, const DataSection& roles,
                                   const std::string& source = "<covariates>");

/// Runs non-wear detection, the wear filter and empirical quantiles on every
/// subject, and joins with covariates. Covariate standardization is computed
/// over the retained subjects. Ids present in only one input are an error.
IngestResult assemble_dataset(const std::map<std::string, RawActivitySeries>& series,
                              std::istream& covariates, const DataSection& roles,
                              const std::string& covariates_source = "<covariates>");

IngestResult assemble_dataset(const std::filesystem::path& series_file, const std::filesystem::path& covariates_file,
                              const DataSection& roles);

void write_exclusions_csv(std::ostream& out, const std::vector<Exclusion>& exclusions);

} // namespace plfsi
