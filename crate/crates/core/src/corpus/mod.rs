//! Corpus-level characterization: registration metadata, size
//! distributions, third-party requests and image reuse.

pub mod dhash;
pub mod ks;
pub mod lengths;
pub mod psl;
pub mod rdap;
pub mod thirdparty;

pub use dhash::{dhash, dhash_bits, hamming, hamming_near_duplicates, load_gray, GrayImage, ImageError, ImageHash, NearDuplicate, DHASH_ALGORITHM};
pub use ks::{kolmogorov_q, ks_pvalue, ks_statistic, ks_statistic_exact, ks_test, KsError, KsFraction, KsResult};
pub use lengths::{text_length_report, GroupLengths, LengthReport, PairwiseKs};
pub use psl::{etld_plus_one, url_etld_plus_one, PslError, Registrable, SuffixList};
pub use rdap::{
    parse_domain_object, recency_boundary, registration_summary, DomainRecord, LookupStatus, RdapBootstrap,
    RdapClient, RdapError, RegistrationSummary, ShareRow,
};
pub use thirdparty::{third_party_stats, RequestLog, ThirdPartyError, ThirdPartyStats, TrackerList};
