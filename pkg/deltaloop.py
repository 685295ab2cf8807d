#!/usr/bin/env python
from deltaloop.cli import cli

cli()
