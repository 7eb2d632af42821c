//! Bibliographic metadata codecs: RAMEAU subject headings, the CSV intake
//! format, and `oai_dc` XML.

pub mod ingest;
pub mod rameau;
pub mod xml;

pub use ingest::{parse_ingest_csv, HeaderError, IngestParse, IngestRow, MarkDescriptor, RowError};
pub use rameau::{parse_rameau, RameauError, RameauHeading};
pub use xml::{from_oai_dc_xml, to_oai_dc_xml, DcXmlError};
