# reproduction scenarios
