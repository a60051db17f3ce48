use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a flow in the scenario's flow table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(pub usize);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Aircraft network application domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "ACD")]
    Acd,
    #[serde(rename = "AISD")]
    Aisd,
    #[serde(rename = "HMD")]
    Hmd,
    #[serde(rename = "FRD")]
    Frd,
    #[serde(rename = "PODD")]
    Podd,
    #[serde(rename = "MTC")]
    Mtc,
}

impl Domain {
    /// Domains whose flows may only ride the direct link.
    pub fn is_mission_critical(self) -> bool {
        matches!(self, Domain::Acd | Domain::Aisd | Domain::Hmd | Domain::Frd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum App {
    #[serde(rename = "VoIP")]
    Voip,
    Video,
    Web,
    #[serde(rename = "ACD")]
    Acd,
    #[serde(rename = "AISD")]
    Aisd,
    #[serde(rename = "HMD")]
    Hmd,
    #[serde(rename = "FRD")]
    Frd,
    #[serde(rename = "MTC")]
    Mtc,
}

impl App {
    /// Passenger applications in arrival order for equal start times.
    pub const PASSENGER: [App; 3] = [App::Voip, App::Video, App::Web];

    /// One device per system domain, in flow-id order.
    pub const SYSTEM: [App; 5] = [App::Acd, App::Aisd, App::Hmd, App::Frd, App::Mtc];

    pub fn domain(self) -> Domain {
        match self {
            App::Voip | App::Video | App::Web => Domain::Podd,
            App::Acd => Domain::Acd,
            App::Aisd => Domain::Aisd,
            App::Hmd => Domain::Hmd,
            App::Frd => Domain::Frd,
            App::Mtc => Domain::Mtc,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            App::Voip => "VoIP",
            App::Video => "Video",
            App::Web => "Web",
            App::Acd => "ACD",
            App::Aisd => "AISD",
            App::Hmd => "HMD",
            App::Frd => "FRD",
            App::Mtc => "MTC",
        }
    }

    pub fn parse(name: &str) -> Option<App> {
        let all = [App::PASSENGER.as_slice(), App::SYSTEM.as_slice()].concat();
        all.into_iter().find(|a| a.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for App {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TravelClass {
    First,
    Business,
    Economy,
    None,
}

impl TravelClass {
    pub const CABIN: [TravelClass; 3] = [TravelClass::First, TravelClass::Business, TravelClass::Economy];

    pub fn name(self) -> &'static str {
        match self {
            TravelClass::First => "First",
            TravelClass::Business => "Business",
            TravelClass::Economy => "Economy",
            TravelClass::None => "None",
        }
    }

    pub fn parse(name: &str) -> Option<TravelClass> {
        [
            TravelClass::First,
            TravelClass::Business,
            TravelClass::Economy,
            TravelClass::None,
        ]
        .into_iter()
        .find(|c| c.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for TravelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
