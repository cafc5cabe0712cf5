#pragma once

#include "lora_esl/adr.hpp"
#include "lora_esl/channel.hpp"
#include "lora_esl/deployment.hpp"
#include "lora_esl/errors.hpp"
#include "lora_esl/link_budget.hpp"
#include "lora_esl/report_io.hpp"
#include "lora_esl/rng.hpp"
#include "lora_esl/scenario_io.hpp"
#include "lora_esl/simulator.hpp"
