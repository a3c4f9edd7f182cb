#!/usr/bin/env node
import { serve } from "./protocol.js";

serve();
